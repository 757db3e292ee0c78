//! Byte-stream transports and the recording connection wrapper used by both
//! protocol roles.

use std::io::{self, Read, Write};
use std::sync::mpsc::{channel, Receiver, Sender};
use std::time::{Duration, Instant};

use crate::group::GroupParams;
use crate::protocol::ProtocolError;
use crate::wire::{frame, read_frame, write_frame, Message};

/// One end of an in-memory duplex byte pipe.
pub struct MemoryStream {
    tx: Sender<Vec<u8>>,
    rx: Receiver<Vec<u8>>,
    pending: Vec<u8>,
    pos: usize,
}

/// Two connected in-memory stream ends.
pub fn memory_pair() -> (MemoryStream, MemoryStream) {
    let (a_tx, b_rx) = channel();
    let (b_tx, a_rx) = channel();
    (
        MemoryStream { tx: a_tx, rx: a_rx, pending: Vec::new(), pos: 0 },
        MemoryStream { tx: b_tx, rx: b_rx, pending: Vec::new(), pos: 0 },
    )
}

impl Read for MemoryStream {
    fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        if buf.is_empty() {
            return Ok(0);
        }
        while self.pos == self.pending.len() {
            match self.rx.recv() {
                Ok(chunk) => {
                    self.pending = chunk;
                    self.pos = 0;
                }
                // Peer dropped: end of stream.
                Err(_) => return Ok(0),
            }
        }
        let n = buf.len().min(self.pending.len() - self.pos);
        buf[..n].copy_from_slice(&self.pending[self.pos..self.pos + n]);
        self.pos += n;
        Ok(n)
    }
}

impl Write for MemoryStream {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        if buf.is_empty() {
            return Ok(0);
        }
        self.tx
            .send(buf.to_vec())
            .map_err(|_| io::Error::new(io::ErrorKind::BrokenPipe, "peer closed"))?;
        Ok(buf.len())
    }

    fn flush(&mut self) -> io::Result<()> {
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Sent,
    Received,
}

#[derive(Debug, Clone)]
pub struct TranscriptEntry {
    pub direction: Direction,
    /// Time since the connection was opened.
    pub at: Duration,
    pub message: Message,
    /// The exact frame bytes, length prefix included.
    pub frame: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SessionOutcome {
    Completed,
    HaltedDirectNeighbour,
    Aborted(String),
}

#[derive(Debug, Clone)]
pub struct SessionTranscript {
    pub entries: Vec<TranscriptEntry>,
    pub outcome: SessionOutcome,
}

impl SessionTranscript {
    pub fn empty(outcome: SessionOutcome) -> Self {
        SessionTranscript { entries: Vec::new(), outcome }
    }

    pub fn messages(&self) -> impl Iterator<Item = &Message> {
        self.entries.iter().map(|e| &e.message)
    }

    pub fn received(&self) -> impl Iterator<Item = &Message> {
        self.entries.iter().filter(|e| e.direction == Direction::Received).map(|e| &e.message)
    }

    pub fn count(&self, pred: impl Fn(&Message) -> bool) -> usize {
        self.messages().filter(|m| pred(m)).count()
    }

    pub fn psi_message_count(&self) -> usize {
        self.count(Message::is_psi)
    }

    /// Every frame in the order this party saw it.
    pub fn bytes(&self) -> Vec<u8> {
        self.entries.iter().flat_map(|e| e.frame.iter().copied()).collect()
    }

    /// Frames in one direction, concatenated.
    pub fn bytes_in(&self, direction: Direction) -> Vec<u8> {
        self.entries
            .iter()
            .filter(|e| e.direction == direction)
            .flat_map(|e| e.frame.iter().copied())
            .collect()
    }
}

/// A framed, recording connection over any byte stream.
pub struct Connection<S> {
    stream: S,
    params: Option<&'static GroupParams>,
    started: Instant,
    entries: Vec<TranscriptEntry>,
}

impl<S: Read + Write> Connection<S> {
    pub fn new(stream: S) -> Self {
        Connection { stream, params: None, started: Instant::now(), entries: Vec::new() }
    }

    pub fn set_params(&mut self, params: &'static GroupParams) {
        self.params = Some(params);
    }

    pub fn params(&self) -> Option<&'static GroupParams> {
        self.params
    }

    pub fn send(&mut self, message: Message) -> Result<(), ProtocolError> {
        let frame = message.encode(self.params);
        if let Err(e) = write_frame(&mut self.stream, &frame) {
            // A peer that hung up may have said why first.
            if let Ok((ty, body)) = read_frame(&mut self.stream) {
                if let Ok(Message::Abort(reason)) = Message::decode(ty, &body, self.params) {
                    return Err(ProtocolError::PeerAborted(reason));
                }
            }
            return Err(e.into());
        }
        self.record(Direction::Sent, message, frame);
        Ok(())
    }

    /// Receives the next message; a peer `Abort` surfaces as an error.
    pub fn recv(&mut self) -> Result<Message, ProtocolError> {
        let (ty, body) = read_frame(&mut self.stream)?;
        let message = Message::decode(ty, &body, self.params)?;
        self.record(Direction::Received, message.clone(), frame(ty, &body));
        match message {
            Message::Abort(reason) => Err(ProtocolError::PeerAborted(reason)),
            m => Ok(m),
        }
    }

    /// Best-effort abort notification; transport errors are ignored.
    pub fn abort(&mut self, reason: &str) {
        let mut reason = reason.to_string();
        while reason.len() > u16::MAX as usize {
            reason.pop();
        }
        let _ = self.send(Message::Abort(reason));
    }

    pub fn finish(self, outcome: SessionOutcome) -> SessionTranscript {
        SessionTranscript { entries: self.entries, outcome }
    }

    fn record(&mut self, direction: Direction, message: Message, frame: Vec<u8>) {
        self.entries.push(TranscriptEntry { direction, at: self.started.elapsed(), message, frame });
    }
}
