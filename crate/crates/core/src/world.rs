//! Simulation state: grid, agents and the perceiver profiles they use.

use std::sync::Arc;

use crate::agent::{AgentState, GroupId, History};
use crate::emotion::Emotion;
use crate::error::{Error, Result};
use crate::grid::{AgentId, Grid, GridPos};
use crate::perception::{ConfusionMatrix, PerceptionTable};

/// A classifier shared by every agent of one group.
#[derive(Debug, Clone, PartialEq)]
pub struct PerceiverProfile {
    pub label: String,
    pub matrix: ConfusionMatrix,
    pub table: PerceptionTable,
}

impl PerceiverProfile {
    pub fn new(matrix: ConfusionMatrix, table: PerceptionTable) -> Self {
        PerceiverProfile {
            label: matrix.label.clone(),
            matrix,
            table,
        }
    }
}

#[derive(Debug, Clone)]
pub struct World {
    grid: Grid,
    agents: Vec<AgentState>,
    profiles: Vec<Arc<PerceiverProfile>>,
    step: usize,
}

impl World {
    pub fn new(width: usize, height: usize, profiles: Vec<Arc<PerceiverProfile>>) -> Result<Self> {
        Ok(World {
            grid: Grid::new(width, height)?,
            agents: Vec::new(),
            profiles,
            step: 0,
        })
    }

    /// Adds an agent with full trust and an empty history.
    pub fn add_agent(
        &mut self,
        group: GroupId,
        identity: usize,
        emotion: Emotion,
        pos: GridPos,
        history_len: usize,
    ) -> Result<AgentId> {
        let profile = self
            .profiles
            .get(group.0)
            .ok_or_else(|| Error::UnknownProfile(format!("group {}", group.0)))?;
        // every profile must be able to read this face
        for p in &self.profiles {
            if identity >= p.table.n_identities() {
                return Err(Error::UnknownIdentity {
                    identity,
                    len: p.table.n_identities(),
                });
            }
        }
        if self.agents.iter().any(|a| a.identity == identity) {
            return Err(Error::InvalidParameter(format!(
                "identity {identity} already in use by profile {}",
                profile.label
            )));
        }
        let id = AgentId(self.agents.len());
        self.grid.place_agent(id, pos)?;
        self.agents.push(AgentState {
            id,
            identity,
            group,
            emotion,
            trust: 1.0,
            history: History::new(history_len),
            pos,
        });
        Ok(id)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn agents(&self) -> &[AgentState] {
        &self.agents
    }

    pub fn agent(&self, id: AgentId) -> &AgentState {
        &self.agents[id.0]
    }

    /// Mutable access to an agent's non-spatial state. Positions change
    /// only through [`World::relocate`].
    pub fn agent_mut(&mut self, id: AgentId) -> &mut AgentState {
        &mut self.agents[id.0]
    }

    pub(crate) fn agents_mut(&mut self) -> &mut [AgentState] {
        &mut self.agents
    }

    pub fn profiles(&self) -> &[Arc<PerceiverProfile>] {
        &self.profiles
    }

    pub fn profile(&self, group: GroupId) -> &PerceiverProfile {
        &self.profiles[group.0]
    }

    pub fn len(&self) -> usize {
        self.agents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }

    /// Number of completed steps.
    pub fn step_count(&self) -> usize {
        self.step
    }

    pub(crate) fn advance_step(&mut self) {
        self.step += 1;
    }

    pub fn relocate(&mut self, id: AgentId, to: GridPos) -> Result<()> {
        self.grid.relocate_agent(id, to)?;
        self.agents[id.0].pos = to;
        Ok(())
    }

    /// Verifies the structural invariants: single occupancy, agreement
    /// between agent positions and the grid, trust bounds and history
    /// capacity.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        if !self.grid.is_consistent() {
            return Err("grid occupancy and positions disagree".into());
        }
        if self.grid.num_agents() != self.agents.len() {
            return Err(format!(
                "{} agents but {} placed",
                self.agents.len(),
                self.grid.num_agents()
            ));
        }
        for a in &self.agents {
            if self.grid.position(a.id) != Some(a.pos) {
                return Err(format!("agent {} position {} not on grid", a.id, a.pos));
            }
            if !(0.0..=1.0).contains(&a.trust) {
                return Err(format!("agent {} trust {} out of bounds", a.id, a.trust));
            }
            if a.history.len() > a.history.capacity() {
                return Err(format!("agent {} history overflow", a.id));
            }
        }
        Ok(())
    }
}
