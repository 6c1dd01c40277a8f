//! Toroidal lattice with single-occupancy cells.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AgentId(pub usize);

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GridPos {
    pub x: usize,
    pub y: usize,
}

impl GridPos {
    pub const fn new(x: usize, y: usize) -> Self {
        GridPos { x, y }
    }
}

impl fmt::Display for GridPos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Moore offsets in row-major order, self excluded.
pub const MOORE_OFFSETS: [(isize, isize); 8] = [
    (-1, -1),
    (0, -1),
    (1, -1),
    (-1, 0),
    (1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];

pub type Neighborhood = [(GridPos, Option<AgentId>); 8];

/// A `width × height` torus. Each cell holds at most one agent, and the grid
/// keeps the reverse map from agent to cell so the two always agree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grid {
    width: usize,
    height: usize,
    cells: Vec<Option<AgentId>>,
    positions: Vec<Option<GridPos>>,
}

impl Grid {
    /// Both dimensions must be at least 3 so that Moore neighborhoods do
    /// not alias on the torus.
    pub fn new(width: usize, height: usize) -> Result<Self> {
        if width < 3 || height < 3 {
            return Err(Error::InvalidParameter(format!(
                "grid must be at least 3x3, got {width}x{height}"
            )));
        }
        Ok(Grid {
            width,
            height,
            cells: vec![None; width * height],
            positions: Vec::new(),
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn num_cells(&self) -> usize {
        self.width * self.height
    }

    pub fn num_agents(&self) -> usize {
        self.positions.iter().filter(|p| p.is_some()).count()
    }

    #[inline]
    fn cell_index(&self, pos: GridPos) -> usize {
        debug_assert!(pos.x < self.width && pos.y < self.height);
        pos.y * self.width + pos.x
    }

    fn check_bounds(&self, pos: GridPos) -> Result<()> {
        if pos.x < self.width && pos.y < self.height {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "position {pos} outside {}x{} grid",
                self.width, self.height
            )))
        }
    }

    /// Translate `pos` by `(dx, dy)` with wraparound.
    pub fn offset(&self, pos: GridPos, dx: isize, dy: isize) -> GridPos {
        let w = self.width as isize;
        let h = self.height as isize;
        GridPos {
            x: (pos.x as isize + dx).rem_euclid(w) as usize,
            y: (pos.y as isize + dy).rem_euclid(h) as usize,
        }
    }

    /// All cells in row-major order.
    pub fn cells(&self) -> impl Iterator<Item = GridPos> + '_ {
        (0..self.height).flat_map(move |y| (0..self.width).map(move |x| GridPos { x, y }))
    }

    #[inline]
    pub fn occupant(&self, pos: GridPos) -> Option<AgentId> {
        self.cells[self.cell_index(pos)]
    }

    #[inline]
    pub fn is_free(&self, pos: GridPos) -> bool {
        self.occupant(pos).is_none()
    }

    pub fn position(&self, id: AgentId) -> Option<GridPos> {
        self.positions.get(id.0).copied().flatten()
    }

    /// The eight surrounding cells in canonical order, each with its
    /// occupant if any.
    pub fn moore_neighbors(&self, pos: GridPos) -> Neighborhood {
        MOORE_OFFSETS.map(|(dx, dy)| {
            let p = self.offset(pos, dx, dy);
            (p, self.occupant(p))
        })
    }

    pub fn is_adjacent(&self, a: GridPos, b: GridPos) -> bool {
        MOORE_OFFSETS.iter().any(|&(dx, dy)| self.offset(a, dx, dy) == b)
    }

    pub fn place_agent(&mut self, id: AgentId, pos: GridPos) -> Result<()> {
        self.check_bounds(pos)?;
        if !self.is_free(pos) {
            return Err(Error::OccupiedCell(pos));
        }
        if self.position(id).is_some() {
            return Err(Error::InvalidParameter(format!("agent {id} is already placed")));
        }
        if self.positions.len() <= id.0 {
            self.positions.resize(id.0 + 1, None);
        }
        let idx = self.cell_index(pos);
        self.cells[idx] = Some(id);
        self.positions[id.0] = Some(pos);
        Ok(())
    }

    pub fn relocate_agent(&mut self, id: AgentId, to: GridPos) -> Result<()> {
        self.check_bounds(to)?;
        let from = self.position(id).ok_or(Error::UnknownAgent(id.0))?;
        if !self.is_adjacent(from, to) {
            return Err(Error::NotAdjacent { from, to });
        }
        if !self.is_free(to) {
            return Err(Error::OccupiedCell(to));
        }
        let from_idx = self.cell_index(from);
        let to_idx = self.cell_index(to);
        self.cells[from_idx] = None;
        self.cells[to_idx] = Some(id);
        self.positions[id.0] = Some(to);
        Ok(())
    }

    /// Checks that the occupancy map and the agent position map are mutual
    /// inverses.
    pub fn is_consistent(&self) -> bool {
        let occupied = self.cells.iter().filter(|c| c.is_some()).count();
        if occupied != self.num_agents() {
            return false;
        }
        self.positions.iter().enumerate().all(|(i, p)| match p {
            Some(pos) => self.occupant(*pos) == Some(AgentId(i)),
            None => true,
        })
    }
}
