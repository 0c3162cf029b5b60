//! Message transports. Both carry encoded frames, so the in-process queue
//! exercises the same codec as TCP.

use std::io::{self, BufReader, BufWriter, Read, Write};
use std::net::TcpStream;
use std::sync::mpsc::{channel, Receiver, Sender};

use thiserror::Error;

use super::wire::{WireError, WireMessage};

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("connection closed")]
    Closed,
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Wire(#[from] WireError),
}

pub trait MessageSink: Send {
    fn send(&mut self, msg: &WireMessage) -> Result<(), TransportError>;
}

pub trait MessageSource: Send {
    /// Blocks until a message arrives or the peer goes away.
    fn recv(&mut self) -> Result<WireMessage, TransportError>;
}

/// One end of a duplex link.
pub struct Connection {
    pub sink: Box<dyn MessageSink>,
    pub source: Box<dyn MessageSource>,
}

struct QueueSink(Sender<Vec<u8>>);
struct QueueSource(Receiver<Vec<u8>>);

impl MessageSink for QueueSink {
    fn send(&mut self, msg: &WireMessage) -> Result<(), TransportError> {
        self.0.send(msg.encode()).map_err(|_| TransportError::Closed)
    }
}

impl MessageSource for QueueSource {
    fn recv(&mut self) -> Result<WireMessage, TransportError> {
        let frame = self.0.recv().map_err(|_| TransportError::Closed)?;
        Ok(WireMessage::decode_frame(&frame)?)
    }
}

/// Two connected in-process endpoints.
pub fn in_process_pair() -> (Connection, Connection) {
    let (a_tx, a_rx) = channel();
    let (b_tx, b_rx) = channel();
    (
        Connection { sink: Box::new(QueueSink(a_tx)), source: Box::new(QueueSource(b_rx)) },
        Connection { sink: Box::new(QueueSink(b_tx)), source: Box::new(QueueSource(a_rx)) },
    )
}

struct TcpSink(BufWriter<TcpStream>);
struct TcpSource(BufReader<TcpStream>);

impl MessageSink for TcpSink {
    fn send(&mut self, msg: &WireMessage) -> Result<(), TransportError> {
        self.0.write_all(&msg.encode())?;
        self.0.flush()?;
        Ok(())
    }
}

impl MessageSource for TcpSource {
    fn recv(&mut self) -> Result<WireMessage, TransportError> {
        let mut len = [0u8; 4];
        match self.0.read_exact(&mut len) {
            Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => return Err(TransportError::Closed),
            r => r?,
        }
        let mut body = vec![0u8; u32::from_le_bytes(len) as usize];
        self.0.read_exact(&mut body).map_err(|e| match e.kind() {
            io::ErrorKind::UnexpectedEof => TransportError::Wire(WireError::Truncated),
            _ => TransportError::Io(e),
        })?;
        Ok(WireMessage::decode(&body)?)
    }
}

pub fn tcp_connection(stream: TcpStream) -> io::Result<Connection> {
    stream.set_nodelay(true)?;
    let reader = stream.try_clone()?;
    Ok(Connection { sink: Box::new(TcpSink(BufWriter::new(stream))), source: Box::new(TcpSource(BufReader::new(reader))) })
}
