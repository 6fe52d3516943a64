use std::cell::Cell;

use super::Name;

/// Fresh-name supply for one generation run. Indices start at 1 and grow by
/// one per draw, regardless of hint, so names never collide within a session.
#[derive(Debug, Default)]
pub struct NameSession {
    next: Cell<u32>,
}

impl NameSession {
    pub fn new() -> Self {
        NameSession { next: Cell::new(1) }
    }

    pub fn fresh(&self, hint: &str) -> Name {
        let id = self.next.get().max(1);
        self.next.set(id + 1);
        Name::new(hint, id)
    }

    /// Number of names drawn so far.
    pub fn drawn(&self) -> u32 {
        self.next.get().saturating_sub(1)
    }
}
