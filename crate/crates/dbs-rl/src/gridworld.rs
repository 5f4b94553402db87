//! GridWorld construction: a rectangular grid with walls, a start cell, and
//! a goal cell worth +1.
//!
//! Map files are plain text, one row per line: `#` wall, `.` floor, `S` start,
//! `G` goal (exactly one of each), all rows the same width.
//!
//! The built MDP has one state per non-wall cell plus one absorbing terminal
//! state. Moving into a wall or off the grid leaves the agent in place.
//! Entering the goal cell pays the goal reward and transitions to the
//! absorbing terminal state, so the goal cell itself is never occupied and is
//! marked terminal alongside the absorbing state.

use std::collections::VecDeque;
use std::fmt;

use crate::error::{Error, Result};
use crate::mdp::TabularMdp;

pub const N_ACTIONS: usize = 4;

/// Grid actions in dispatch order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    Up = 0,
    Down = 1,
    Left = 2,
    Right = 3,
}

impl Action {
    pub const ALL: [Action; 4] = [Action::Up, Action::Down, Action::Left, Action::Right];

    fn delta(self) -> (isize, isize) {
        match self {
            Action::Up => (-1, 0),
            Action::Down => (1, 0),
            Action::Left => (0, -1),
            Action::Right => (0, 1),
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Action::Up => "up",
            Action::Down => "down",
            Action::Left => "left",
            Action::Right => "right",
        };
        write!(f, "{name}")
    }
}

/// Geometry and reward parameters of a GridWorld instance.
#[derive(Debug, Clone, PartialEq)]
pub struct GridWorldSpec {
    pub width: usize,
    pub height: usize,
    /// walls[row * width + col]
    pub walls: Vec<bool>,
    /// (row, col)
    pub start: (usize, usize),
    pub goal: (usize, usize),
    pub step_reward: f64,
    pub goal_reward: f64,
    pub max_steps: usize,
    pub gamma: f64,
}

impl GridWorldSpec {
    /// Wall-free grid with start at the top-left and goal at the bottom-right.
    pub fn wall_free(width: usize, height: usize) -> Self {
        GridWorldSpec {
            width,
            height,
            walls: vec![false; width * height],
            start: (0, 0),
            goal: (height - 1, width - 1),
            step_reward: 0.0,
            goal_reward: 1.0,
            max_steps: 300,
            gamma: 0.9,
        }
    }

    /// Parse a text map (`#` wall, `.` floor, `S` start, `G` goal).
    pub fn from_map_str(map: &str) -> Result<Self> {
        let rows: Vec<&str> = map.lines().filter(|l| !l.trim().is_empty()).collect();
        if rows.is_empty() {
            return Err(Error::InvalidMap("map has no rows".into()));
        }
        let width = rows[0].chars().count();
        if width == 0 {
            return Err(Error::InvalidMap("map rows are empty".into()));
        }
        let height = rows.len();
        let mut walls = vec![false; width * height];
        let mut start = None;
        let mut goal = None;
        for (r, line) in rows.iter().enumerate() {
            let cells: Vec<char> = line.chars().collect();
            if cells.len() != width {
                return Err(Error::InvalidMap(format!(
                    "row {r} has width {}, expected {width}",
                    cells.len()
                )));
            }
            for (c, ch) in cells.iter().enumerate() {
                match ch {
                    '#' => walls[r * width + c] = true,
                    '.' => {}
                    'S' => {
                        if start.replace((r, c)).is_some() {
                            return Err(Error::InvalidMap("more than one start cell".into()));
                        }
                    }
                    'G' => {
                        if goal.replace((r, c)).is_some() {
                            return Err(Error::InvalidMap("more than one goal cell".into()));
                        }
                    }
                    other => {
                        return Err(Error::InvalidMap(format!(
                            "unknown cell character {other:?} at row {r}, col {c}"
                        )));
                    }
                }
            }
        }
        let start = start.ok_or_else(|| Error::InvalidMap("missing start cell S".into()))?;
        let goal = goal.ok_or_else(|| Error::InvalidMap("missing goal cell G".into()))?;
        Ok(GridWorldSpec {
            width,
            height,
            walls,
            start,
            goal,
            step_reward: 0.0,
            goal_reward: 1.0,
            max_steps: 300,
            gamma: 0.9,
        })
    }

    pub fn is_wall(&self, row: usize, col: usize) -> bool {
        self.walls[row * self.width + col]
    }
}

/// A built GridWorld: the MDP plus the cell/state correspondence.
#[derive(Debug, Clone)]
pub struct GridWorld {
    pub mdp: TabularMdp,
    pub spec: GridWorldSpec,
    pub start_state: usize,
    pub goal_state: usize,
    /// The absorbing state entered when the goal is reached.
    pub terminal_state: usize,
    state_of_cell: Vec<Option<usize>>,
    cell_of_state: Vec<(usize, usize)>,
}

impl GridWorld {
    pub fn state_of_cell(&self, row: usize, col: usize) -> Option<usize> {
        self.state_of_cell[row * self.spec.width + col]
    }

    /// Cell of a non-terminal state.
    pub fn cell_of_state(&self, s: usize) -> Option<(usize, usize)> {
        self.cell_of_state.get(s).copied()
    }

    /// BFS distance (in steps) from the start cell to the goal cell.
    pub fn shortest_path_steps(&self) -> usize {
        bfs_distance(&self.spec, self.spec.start, self.spec.goal)
            .expect("goal reachability was checked at construction")
    }

    /// BFS distance from an arbitrary cell to the goal, if reachable.
    pub fn distance_to_goal(&self, cell: (usize, usize)) -> Option<usize> {
        bfs_distance(&self.spec, cell, self.spec.goal)
    }
}

fn bfs_distance(spec: &GridWorldSpec, from: (usize, usize), to: (usize, usize)) -> Option<usize> {
    if from == to {
        return Some(0);
    }
    let idx = |r: usize, c: usize| r * spec.width + c;
    let mut dist = vec![usize::MAX; spec.width * spec.height];
    let mut queue = VecDeque::new();
    dist[idx(from.0, from.1)] = 0;
    queue.push_back(from);
    while let Some((r, c)) = queue.pop_front() {
        let d = dist[idx(r, c)];
        for action in Action::ALL {
            let (dr, dc) = action.delta();
            let (nr, nc) = (r as isize + dr, c as isize + dc);
            if nr < 0 || nc < 0 || nr as usize >= spec.height || nc as usize >= spec.width {
                continue;
            }
            let (nr, nc) = (nr as usize, nc as usize);
            if spec.is_wall(nr, nc) || dist[idx(nr, nc)] != usize::MAX {
                continue;
            }
            dist[idx(nr, nc)] = d + 1;
            if (nr, nc) == to {
                return Some(d + 1);
            }
            queue.push_back((nr, nc));
        }
    }
    None
}

/// Build the MDP for a GridWorld spec.
///
/// Deterministic dynamics: moving into a wall or the boundary is a no-op;
/// moving into the goal pays `goal_reward` and lands in the absorbing
/// terminal state; every other move pays `step_reward`.
pub fn build_gridworld(spec: &GridWorldSpec) -> Result<GridWorld> {
    let GridWorldSpec { width, height, .. } = *spec;
    if width == 0 || height == 0 {
        return Err(Error::InvalidMap("grid dimensions must be positive".into()));
    }
    let in_grid = |cell: (usize, usize)| cell.0 < height && cell.1 < width;
    if !in_grid(spec.start) || !in_grid(spec.goal) {
        return Err(Error::InvalidMap("start or goal outside the grid".into()));
    }
    if spec.is_wall(spec.start.0, spec.start.1) || spec.is_wall(spec.goal.0, spec.goal.1) {
        return Err(Error::InvalidMap("start or goal is a wall".into()));
    }
    if spec.start == spec.goal {
        return Err(Error::InvalidMap("start and goal coincide".into()));
    }
    if bfs_distance(spec, spec.start, spec.goal).is_none() {
        return Err(Error::InvalidMap("goal is unreachable from start".into()));
    }

    let mut state_of_cell = vec![None; width * height];
    let mut cell_of_state = Vec::new();
    for r in 0..height {
        for c in 0..width {
            if !spec.is_wall(r, c) {
                state_of_cell[r * width + c] = Some(cell_of_state.len());
                cell_of_state.push((r, c));
            }
        }
    }
    let n_cells = cell_of_state.len();
    let terminal_state = n_cells;
    let n_states = n_cells + 1;
    let goal_state = state_of_cell[spec.goal.0 * width + spec.goal.1].unwrap();
    let start_state = state_of_cell[spec.start.0 * width + spec.start.1].unwrap();

    let mut transitions = vec![Vec::new(); n_states * N_ACTIONS];
    let mut rewards = vec![0.0; n_states * N_ACTIONS];
    let mut terminal = vec![false; n_states];
    terminal[terminal_state] = true;
    // The goal cell is only ever a *target* of a move (which redirects to the
    // absorbing state), so it behaves as a terminal state itself.
    terminal[goal_state] = true;

    for (s, &(r, c)) in cell_of_state.iter().enumerate() {
        for action in Action::ALL {
            let slot = s * N_ACTIONS + action as usize;
            if terminal[s] {
                transitions[slot] = vec![(s, 1.0)];
                continue;
            }
            let (dr, dc) = action.delta();
            let (nr, nc) = (r as isize + dr, c as isize + dc);
            let dest = if nr < 0 || nc < 0 || nr as usize >= height || nc as usize >= width {
                (r, c)
            } else {
                let cand = (nr as usize, nc as usize);
                if spec.is_wall(cand.0, cand.1) {
                    (r, c)
                } else {
                    cand
                }
            };
            if dest == spec.goal {
                transitions[slot] = vec![(terminal_state, 1.0)];
                rewards[slot] = spec.goal_reward;
            } else {
                let next = state_of_cell[dest.0 * width + dest.1].unwrap();
                transitions[slot] = vec![(next, 1.0)];
                rewards[slot] = spec.step_reward;
            }
        }
    }
    for action in 0..N_ACTIONS {
        transitions[terminal_state * N_ACTIONS + action] = vec![(terminal_state, 1.0)];
    }

    let mdp = TabularMdp::new(
        n_states,
        N_ACTIONS,
        transitions,
        rewards,
        spec.gamma,
        terminal,
    )?;
    Ok(GridWorld {
        mdp,
        spec: spec.clone(),
        start_state,
        goal_state,
        terminal_state,
        state_of_cell,
        cell_of_state,
    })
}

/// The default 10x10 layout shipped with the crate.
pub const DEFAULT_MAP_10X10: &str = include_str!("../maps/default_10x10.txt");

/// Build the default 10x10 GridWorld.
pub fn default_gridworld() -> Result<GridWorld> {
    build_gridworld(&GridWorldSpec::from_map_str(DEFAULT_MAP_10X10)?)
}
