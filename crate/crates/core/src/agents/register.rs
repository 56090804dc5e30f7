use std::sync::Arc;

use crate::error::{Error, Result};
use crate::nn::Matrix;

/// An activation batch as it travels between parties: 32-bit floats,
/// shared by reference so one send to several hosts costs one allocation.
#[derive(Debug, Clone, PartialEq)]
pub struct Message {
    rows: usize,
    cols: usize,
    data: Arc<[f32]>,
}

impl Message {
    pub fn encode(m: &Matrix) -> Self {
        Self {
            rows: m.rows(),
            cols: m.cols(),
            data: m.as_slice().iter().map(|&v| v as f32).collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn bits(&self) -> u64 {
        (self.rows * self.cols * 32) as u64
    }

    pub fn decode(&self) -> Matrix {
        let data = self.data.iter().map(|&v| f64::from(v)).collect();
        Matrix::from_vec(self.rows, self.cols, data).expect("message shape is consistent")
    }

    pub fn row(&self, r: usize) -> &[f32] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }
}

/// Latest-value cell from one guest to one host. Reads never consume.
#[derive(Debug, Clone)]
pub struct CommRegister {
    writer: usize,
    reader: usize,
    latest: Option<Message>,
    writes: u64,
}

impl CommRegister {
    pub fn new(writer: usize, reader: usize) -> Self {
        Self {
            writer,
            reader,
            latest: None,
            writes: 0,
        }
    }

    pub fn writer(&self) -> usize {
        self.writer
    }

    pub fn reader(&self) -> usize {
        self.reader
    }

    pub fn write(&mut self, from: usize, msg: Message) -> Result<()> {
        if from != self.writer {
            return Err(Error::State(format!(
                "guest {from} wrote to the register owned by guest {}",
                self.writer
            )));
        }
        self.latest = Some(msg);
        self.writes += 1;
        Ok(())
    }

    pub fn read(&self) -> Option<&Message> {
        self.latest.as_ref()
    }

    pub fn writes(&self) -> u64 {
        self.writes
    }
}
