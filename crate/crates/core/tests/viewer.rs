use std::net::{TcpListener, TcpStream};
use std::thread::JoinHandle;
use std::time::Duration;

use elephant::dfb::{serve, DfbError, FrameHeader, LocalRenderer, ServeOptions, ServeSummary};
use elephant::render::{Mode, RenderConfig, RenderScene, SceneOptions};
use elephant::scene::{generate_challenge_scene, Preset};
use tungstenite::protocol::frame::coding::CloseCode;
use tungstenite::{Message, WebSocket};

const W: u32 = 64;
const H: u32 = 40;

fn start(opts: ServeOptions) -> (WebSocket<TcpStream>, JoinHandle<Result<ServeSummary, DfbError>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let server = std::thread::spawn(move || {
        let desc = generate_challenge_scene(&Preset::Mini.spec(), 2).unwrap().0;
        let rs = RenderScene::build(desc, &SceneOptions::default()).unwrap();
        let mut local = LocalRenderer::new(rs, RenderConfig { max_path_depth: 2, ..Default::default() }, W, H);
        serve(&listener, &mut local, &opts)
    });
    let stream = TcpStream::connect(addr).unwrap();
    stream.set_read_timeout(Some(Duration::from_secs(60))).unwrap();
    let (ws, _) = tungstenite::client(format!("ws://{addr}/"), stream).unwrap();
    (ws, server)
}

fn next_frame(ws: &mut WebSocket<TcpStream>) -> (FrameHeader, Vec<u8>) {
    loop {
        match ws.read().unwrap() {
            Message::Binary(b) => {
                let (h, payload) = FrameHeader::decode(&b).expect("frame header");
                return (h, payload.to_vec());
            }
            Message::Text(_) => {}
            m => panic!("unexpected {m:?}"),
        }
    }
}

fn close_code(ws: &mut WebSocket<TcpStream>) -> Option<CloseCode> {
    loop {
        match ws.read() {
            Ok(Message::Close(f)) => return f.map(|f| f.code),
            Ok(_) => {}
            Err(_) => return None,
        }
    }
}

fn hang_up(mut ws: WebSocket<TcpStream>, server: JoinHandle<Result<ServeSummary, DfbError>>) -> ServeSummary {
    let _ = ws.close(None);
    let _ = close_code(&mut ws);
    server.join().unwrap().unwrap()
}

#[test]
fn streams_raw_frames_in_order() {
    let (mut ws, server) = start(ServeOptions::default());
    let mut last = None;
    for k in 0..5 {
        let (h, payload) = next_frame(&mut ws);
        assert_eq!((h.width, h.height, h.format, h.mode), (W, H, 0, Mode::PathTrace.code()));
        assert_eq!(payload.len(), (W * H * 3) as usize);
        if let Some(prev) = last {
            assert!(h.frame_index > prev);
        }
        assert_eq!(h.frame_in_sequence, h.frame_index + 1, "frame {k}");
        last = Some(h.frame_index);
    }
    let summary = hang_up(ws, server);
    assert!(summary.frames_sent >= 5);
}

#[test]
fn camera_update_restarts_accumulation() {
    let (mut ws, server) = start(ServeOptions::default());
    let (first, _) = next_frame(&mut ws);
    let cam = r#"{"type":"camera","position":[0,3,9],"target":[0,0,0],"up":[0,1,0],"fov":50}"#;
    ws.send(Message::Text(cam.into())).unwrap();
    let mut restarted = None;
    let mut prev = first.frame_index;
    for _ in 0..200 {
        let (h, _) = next_frame(&mut ws);
        assert!(h.frame_index > prev);
        prev = h.frame_index;
        match restarted {
            None if h.frame_in_sequence == 1 => restarted = Some(h.frame_index),
            // frames from the old sequence were already in flight
            None => assert_eq!(h.frame_in_sequence, h.frame_index + 1),
            Some(start) => assert_eq!(h.frame_in_sequence as u64, (h.frame_index - start + 1) as u64),
        }
        if restarted.is_some_and(|s| h.frame_index >= s + 3) {
            break;
        }
    }
    assert!(restarted.is_some(), "sequence never restarted");
    hang_up(ws, server);
}

#[test]
fn mode_switch_reaches_the_display() {
    let (mut ws, server) = start(ServeOptions::default());
    next_frame(&mut ws);
    ws.send(Message::Text(r#"{"type":"config","mode":"costheat"}"#.into())).unwrap();
    let mut switched = false;
    for _ in 0..200 {
        let (h, _) = next_frame(&mut ws);
        if switched {
            assert_eq!(h.mode, Mode::CostHeat.code());
        } else if h.mode == Mode::CostHeat.code() {
            assert_eq!(h.frame_in_sequence, 1);
            switched = true;
        }
        if switched && h.frame_in_sequence >= 3 {
            break;
        }
    }
    assert!(switched);
    hang_up(ws, server);
}

#[test]
fn png_format_and_stats_reply() {
    let (mut ws, server) = start(ServeOptions::default());
    next_frame(&mut ws);
    ws.send(Message::Text(r#"{"type":"config","format":"png"}"#.into())).unwrap();
    ws.send(Message::Text(r#"{"type":"stats-request"}"#.into())).unwrap();
    let mut stats = None;
    let mut png = false;
    for _ in 0..200 {
        match ws.read().unwrap() {
            Message::Text(t) => stats = Some(serde_json::from_str::<serde_json::Value>(&t).unwrap()),
            Message::Binary(b) => {
                let (h, payload) = FrameHeader::decode(&b).unwrap();
                if h.format == 1 {
                    assert!(payload.starts_with(b"\x89PNG"));
                    png = true;
                }
            }
            _ => {}
        }
        if png && stats.is_some() {
            break;
        }
    }
    let s = stats.expect("stats reply");
    assert_eq!(s["type"], "stats");
    assert!(s["spp"].as_u64().unwrap() >= 1);
    assert!(s["raysPerPixel"].as_f64().unwrap() > 0.0);
    let total: f64 = s["sharePercents"].as_object().unwrap().values().map(|v| v.as_f64().unwrap()).sum();
    assert!((total - 100.0).abs() <= 0.5, "{total}");
    assert!(s["frameMillis"].as_f64().unwrap() > 0.0);
    assert!(png);
    hang_up(ws, server);
}

#[test]
fn malformed_control_closes_with_1007() {
    let (mut ws, server) = start(ServeOptions::default());
    next_frame(&mut ws);
    ws.send(Message::Text(r#"{"type":"teleport"}"#.into())).unwrap();
    assert_eq!(close_code(&mut ws), Some(CloseCode::Invalid));
    assert_eq!(server.join().unwrap().unwrap().close_code, Some(1007));
}

#[test]
fn binary_from_client_closes_with_1003() {
    let (mut ws, server) = start(ServeOptions::default());
    ws.send(Message::Binary(vec![1, 2, 3])).unwrap();
    assert_eq!(close_code(&mut ws), Some(CloseCode::Unsupported));
    assert_eq!(server.join().unwrap().unwrap().close_code, Some(1003));
}

#[test]
fn frame_limit_closes_normally() {
    let (mut ws, server) = start(ServeOptions { max_frames: Some(3), ..Default::default() });
    for _ in 0..3 {
        next_frame(&mut ws);
    }
    assert_eq!(close_code(&mut ws), Some(CloseCode::Normal));
    let summary = server.join().unwrap().unwrap();
    assert_eq!((summary.frames_sent, summary.close_code), (3, Some(1000)));
}
