use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::emotion::Emotion;
use crate::grid::{AgentId, GridPos};

/// Fixed-capacity buffer of the most recent emotions, oldest first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct History {
    capacity: usize,
    items: VecDeque<Emotion>,
}

impl History {
    pub fn new(capacity: usize) -> Self {
        History {
            capacity,
            items: VecDeque::with_capacity(capacity),
        }
    }

    pub fn from_slice(capacity: usize, emotions: &[Emotion]) -> Self {
        let mut h = History::new(capacity);
        for &e in emotions {
            h.push(e);
        }
        h
    }

    pub fn push(&mut self, e: Emotion) {
        if self.capacity == 0 {
            return;
        }
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(e);
    }

    pub fn count(&self, e: Emotion) -> usize {
        self.items.iter().filter(|&&x| x == e).count()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn iter(&self) -> impl Iterator<Item = Emotion> + '_ {
        self.items.iter().copied()
    }
}

/// Index of a perceiver profile within a world.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GroupId(pub usize);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub id: AgentId,
    /// Face identity shown to neighbors; unique within a run.
    pub identity: usize,
    pub group: GroupId,
    pub emotion: Emotion,
    pub trust: f64,
    pub history: History,
    pub pos: GridPos,
}
