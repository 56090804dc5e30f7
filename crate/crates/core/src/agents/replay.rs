use super::register::Message;
use crate::error::{Error, Result};
use crate::nn::Matrix;

/// One host input: the per-guest slices that were current at ingest time.
#[derive(Debug, Clone)]
pub struct ReplayEntry {
    slices: Vec<Message>,
}

impl ReplayEntry {
    pub fn new(slices: Vec<Message>) -> Result<Self> {
        if slices.is_empty() {
            return Err(Error::EmptyBuffer);
        }
        Ok(Self { slices })
    }

    /// Row count of the concatenated input. Slices from batches of
    /// different sizes are cut to the shortest.
    pub fn rows(&self) -> usize {
        self.slices.iter().map(Message::rows).min().unwrap_or(0)
    }

    pub fn width(&self) -> usize {
        self.slices.iter().map(Message::cols).sum()
    }

    pub fn slices(&self) -> &[Message] {
        &self.slices
    }

    /// Column-wise concatenation in guest order.
    pub fn to_matrix(&self) -> Matrix {
        let rows = self.rows();
        let width = self.width();
        let mut data = Vec::with_capacity(rows * width);
        for r in 0..rows {
            for s in &self.slices {
                data.extend(s.row(r).iter().map(|&v| f64::from(v)));
            }
        }
        Matrix::from_vec(rows, width, data).expect("entry shape is consistent")
    }
}

/// Append-only input history with a cyclic read cursor.
#[derive(Debug, Clone, Default)]
pub struct ReplayBuffer {
    entries: Vec<ReplayEntry>,
    cursor: usize,
}

impl ReplayBuffer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn push(&mut self, e: ReplayEntry) {
        self.entries.push(e);
    }

    /// Removes the newest entry; the cursor is pulled back if it pointed
    /// past the end.
    pub fn drop_last(&mut self) -> Option<ReplayEntry> {
        let e = self.entries.pop();
        if self.cursor > self.entries.len() {
            self.cursor = self.entries.len();
        }
        e
    }

    pub fn cursor(&self) -> usize {
        self.cursor
    }

    /// Entry at the cursor, wrapping to the start once the end is reached.
    pub fn next_entry(&mut self) -> Result<&ReplayEntry> {
        if self.entries.is_empty() {
            return Err(Error::EmptyBuffer);
        }
        if self.cursor >= self.entries.len() {
            self.cursor = 0;
        }
        let i = self.cursor;
        self.cursor += 1;
        Ok(&self.entries[i])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(v: f64) -> ReplayEntry {
        ReplayEntry::new(vec![Message::encode(&Matrix::filled(1, 1, v))]).unwrap()
    }

    fn read(b: &mut ReplayBuffer) -> f64 {
        b.next_entry().unwrap().to_matrix().get(0, 0)
    }

    #[test]
    fn cyclic_reuse() {
        let mut b = ReplayBuffer::new();
        for v in 0..3 {
            b.push(entry(v as f64));
        }
        let reads: Vec<f64> = (0..5).map(|_| read(&mut b)).collect();
        assert_eq!(reads, [0.0, 1.0, 2.0, 0.0, 1.0]);
    }

    #[test]
    fn empty_buffer_is_an_error() {
        assert!(matches!(
            ReplayBuffer::new().next_entry(),
            Err(Error::EmptyBuffer)
        ));
    }

    #[test]
    fn concatenation_follows_guest_order_and_trims_rows() {
        let a = Message::encode(&Matrix::from_rows(&[vec![1.0], vec![2.0]]).unwrap());
        let b = Message::encode(&Matrix::from_rows(&[vec![3.0, 4.0]]).unwrap());
        let e = ReplayEntry::new(vec![a, b]).unwrap();
        assert_eq!(
            e.to_matrix(),
            Matrix::from_rows(&[vec![1.0, 3.0, 4.0]]).unwrap()
        );
    }

    #[test]
    fn drop_last_keeps_cursor_in_range() {
        let mut b = ReplayBuffer::new();
        b.push(entry(0.0));
        b.push(entry(1.0));
        read(&mut b);
        read(&mut b);
        b.drop_last();
        assert_eq!(b.len(), 1);
        assert_eq!(read(&mut b), 0.0);
    }
}
