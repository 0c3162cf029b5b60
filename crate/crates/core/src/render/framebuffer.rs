//! Tile-major accumulation buffers. Each tile owns its pixels, so tiles can
//! be rendered, shipped and committed independently.

pub const TILE_SIZE: u32 = 64;

#[derive(Clone, Debug, PartialEq)]
pub struct Tile {
    pub index: u32,
    pub x0: u32,
    pub y0: u32,
    pub width: u32,
    pub height: u32,
    /// Samples accumulated into every pixel of this tile.
    pub sample_count: u32,
    pub color: Vec<[f32; 3]>,
    pub albedo: Vec<[f32; 3]>,
    pub normal: Vec<[f32; 3]>,
    /// Rays traced on behalf of each pixel, cumulative.
    pub cost: Vec<u32>,
}

impl Tile {
    pub fn new(index: u32, x0: u32, y0: u32, width: u32, height: u32) -> Self {
        let n = (width * height) as usize;
        Self {
            index,
            x0,
            y0,
            width,
            height,
            sample_count: 0,
            color: vec![[0.0; 3]; n],
            albedo: vec![[0.0; 3]; n],
            normal: vec![[0.0; 3]; n],
            cost: vec![0; n],
        }
    }

    pub fn pixel_count(&self) -> usize {
        (self.width * self.height) as usize
    }

    pub fn clear(&mut self) {
        self.sample_count = 0;
        self.color.fill([0.0; 3]);
        self.albedo.fill([0.0; 3]);
        self.normal.fill([0.0; 3]);
        self.cost.fill(0);
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrameBuffer {
    pub width: u32,
    pub height: u32,
    pub tiles_x: u32,
    pub tiles_y: u32,
    pub tiles: Vec<Tile>,
}

impl FrameBuffer {
    /// Tiles are numbered row-major; the last row and column are clipped.
    pub fn new(width: u32, height: u32) -> Self {
        let tiles_x = width.div_ceil(TILE_SIZE);
        let tiles_y = height.div_ceil(TILE_SIZE);
        let mut tiles = Vec::with_capacity((tiles_x * tiles_y) as usize);
        for ty in 0..tiles_y {
            for tx in 0..tiles_x {
                let (x0, y0) = (tx * TILE_SIZE, ty * TILE_SIZE);
                let index = ty * tiles_x + tx;
                tiles.push(Tile::new(index, x0, y0, TILE_SIZE.min(width - x0), TILE_SIZE.min(height - y0)));
            }
        }
        Self { width, height, tiles_x, tiles_y, tiles }
    }

    pub fn tile_count(&self) -> usize {
        self.tiles.len()
    }

    pub fn pixel_count(&self) -> usize {
        (self.width * self.height) as usize
    }

    pub fn clear(&mut self) {
        self.tiles.iter_mut().for_each(Tile::clear);
    }

    /// Samples per pixel, or `None` while tiles disagree.
    pub fn sample_count(&self) -> Option<u32> {
        let first = self.tiles.first().map_or(0, |t| t.sample_count);
        self.tiles.iter().all(|t| t.sample_count == first).then_some(first)
    }

    fn locate(&self, x: u32, y: u32) -> (&Tile, usize) {
        let t = &self.tiles[((y / TILE_SIZE) * self.tiles_x + x / TILE_SIZE) as usize];
        (t, ((y - t.y0) * t.width + (x - t.x0)) as usize)
    }

    fn resolve(&self, pick: impl Fn(&Tile, usize) -> [f32; 3]) -> Vec<[f32; 3]> {
        let mut out = Vec::with_capacity(self.pixel_count());
        for y in 0..self.height {
            for x in 0..self.width {
                let (t, i) = self.locate(x, y);
                let s = t.sample_count.max(1) as f32;
                out.push(pick(t, i).map(|c| c / s));
            }
        }
        out
    }

    /// Row-major mean color per pixel.
    pub fn color_image(&self) -> Vec<[f32; 3]> {
        self.resolve(|t, i| t.color[i])
    }

    pub fn albedo_image(&self) -> Vec<[f32; 3]> {
        self.resolve(|t, i| t.albedo[i])
    }

    pub fn normal_image(&self) -> Vec<[f32; 3]> {
        self.resolve(|t, i| t.normal[i])
    }

    /// Row-major cumulative ray count per pixel.
    pub fn cost_image(&self) -> Vec<u32> {
        let mut out = Vec::with_capacity(self.pixel_count());
        for y in 0..self.height {
            for x in 0..self.width {
                let (t, i) = self.locate(x, y);
                out.push(t.cost[i]);
            }
        }
        out
    }

    pub fn total_cost(&self) -> u64 {
        self.tiles.iter().flat_map(|t| &t.cost).map(|&c| c as u64).sum()
    }
}
