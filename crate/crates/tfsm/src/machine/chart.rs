//! The chart and the key registers driving its construction.

use std::collections::BTreeMap;

use crate::code::Label;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActiveEdge {
    /// Address of the `load_fs` for the next body element.
    pub label: Label,
    pub regs: Vec<usize>,
}

/// An edge list with a cursor for the driver loop.
#[derive(Clone, Debug)]
pub struct EdgeList<T> {
    items: Vec<T>,
    cursor: usize,
}

impl<T> Default for EdgeList<T> {
    fn default() -> Self {
        EdgeList { items: Vec::new(), cursor: 0 }
    }
}

impl<T> EdgeList<T> {
    pub fn add(&mut self, e: T) {
        self.items.push(e);
    }

    pub fn init(&mut self) {
        self.cursor = 0;
    }

    pub fn advance(&mut self) {
        self.cursor += 1;
    }

    pub fn exhausted(&self) -> bool {
        self.cursor >= self.items.len()
    }

    pub fn current(&self) -> Option<&T> {
        self.items.get(self.cursor)
    }

    pub fn cursor(&self) -> usize {
        self.cursor
    }

    pub fn items(&self) -> &[T] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

#[derive(Clone, Debug, Default)]
pub struct Entry {
    pub active: EdgeList<ActiveEdge>,
    /// Heap addresses of complete edges.
    pub complete: EdgeList<usize>,
}

#[derive(Clone, Debug, Default)]
pub struct Chart {
    entries: BTreeMap<(usize, usize), Entry>,
}

impl Chart {
    pub fn get(&self, l: usize, r: usize) -> Option<&Entry> {
        self.entries.get(&(l, r))
    }

    pub fn get_mut(&mut self, l: usize, r: usize) -> Option<&mut Entry> {
        self.entries.get_mut(&(l, r))
    }

    pub fn entry(&mut self, l: usize, r: usize) -> &mut Entry {
        self.entries.entry((l, r)).or_default()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&(usize, usize), &Entry)> {
        self.entries.iter()
    }

    pub fn complete_count(&self) -> usize {
        self.entries.values().map(|e| e.complete.len()).sum()
    }

    pub fn active_count(&self) -> usize {
        self.entries.values().map(|e| e.active.len()).sum()
    }
}

/// The LEFT, MID and RIGHT registers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Key {
    pub left: isize,
    pub mid: isize,
    pub right: isize,
}

impl Key {
    pub fn first() -> Key {
        Key { left: -1, mid: -1, right: 0 }
    }

    /// Moves to the next key: MID descends first, then LEFT, then RIGHT grows.
    pub fn next(&mut self) {
        self.mid -= 1;
        if self.mid < self.left {
            self.left -= 1;
            if self.left < 0 {
                self.right += 1;
                self.left = self.right - 1;
            }
            self.mid = self.right - 1;
        }
    }

    /// Whether keys remain after this one for an input of length `len`.
    pub fn more(&self, len: usize) -> bool {
        self.right < len as isize || self.left != 0 || self.mid != self.left
    }

    pub fn triple(&self) -> (usize, usize, usize) {
        (self.left as usize, self.mid as usize, self.right as usize)
    }
}

/// Every key the driver visits for an input of length `len`, in order.
pub fn key_sequence(len: usize) -> Vec<(usize, usize, usize)> {
    let mut k = Key::first();
    let mut out = Vec::new();
    loop {
        k.next();
        if k.right as usize <= len {
            out.push(k.triple());
        }
        if !k.more(len) {
            return out;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keys_for_two_words() {
        assert_eq!(key_sequence(2), [(0, 0, 1), (1, 1, 2), (0, 1, 2), (0, 0, 2)]);
    }

    #[test]
    fn empty_input_visits_nothing() {
        assert!(key_sequence(0).is_empty());
    }

    #[test]
    fn cursor_sees_edges_added_while_scanning() {
        let mut l = EdgeList::default();
        l.add(1);
        assert_eq!(l.current(), Some(&1));
        l.advance();
        assert!(l.exhausted());
        l.add(2);
        assert_eq!(l.current(), Some(&2));
    }
}
