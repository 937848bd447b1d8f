//! Corridor sequence construction: BFS cell path, endpoint extension,
//! splitting into row/column runs, iterative growing and pruning.

use crate::error::{Error, Result};
use crate::geom::{Rect, Vec2};
use crate::world::{occupied_cells, Cell, OccupancyGrid, Scenario};
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

/// Axis-aligned obstacle-free rectangle, tracked as an inclusive cell-index
/// range of its grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Corridor {
    pub row_min: usize,
    pub row_max: usize,
    pub col_min: usize,
    pub col_max: usize,
}

impl Corridor {
    fn from_cell(cell: Cell) -> Corridor {
        Corridor {
            row_min: cell.0,
            row_max: cell.0,
            col_min: cell.1,
            col_max: cell.1,
        }
    }

    fn include(&mut self, cell: Cell) {
        self.row_min = self.row_min.min(cell.0);
        self.row_max = self.row_max.max(cell.0);
        self.col_min = self.col_min.min(cell.1);
        self.col_max = self.col_max.max(cell.1);
    }

    pub fn contains_cell(&self, cell: Cell) -> bool {
        cell.0 >= self.row_min
            && cell.0 <= self.row_max
            && cell.1 >= self.col_min
            && cell.1 <= self.col_max
    }

    fn intersects(&self, other: &Corridor) -> bool {
        self.row_min <= other.row_max
            && other.row_min <= self.row_max
            && self.col_min <= other.col_max
            && other.col_min <= self.col_max
    }

    /// Covered by the union of `a` and `b`: every row-span of this corridor
    /// must be covered by the two rectangles' column ranges.
    fn covered_by(&self, a: Option<&Corridor>, b: Option<&Corridor>) -> bool {
        for row in self.row_min..=self.row_max {
            for col in self.col_min..=self.col_max {
                let cell = (row, col);
                let in_a = a.map_or(false, |c| c.contains_cell(cell));
                let in_b = b.map_or(false, |c| c.contains_cell(cell));
                if !in_a && !in_b {
                    return false;
                }
            }
        }
        true
    }

    /// Metric rectangle in world coordinates.
    pub fn rect(&self, grid: &OccupancyGrid) -> Rect {
        let cs = grid.cell_size();
        let o = grid.origin();
        Rect::from_bounds(
            o.x + self.col_min as f64 * cs,
            o.x + (self.col_max + 1) as f64 * cs,
            o.y + self.row_min as f64 * cs,
            o.y + (self.row_max + 1) as f64 * cs,
        )
    }
}

/// Ordered corridor sequence with the metric rectangles cached.
#[derive(Debug, Clone)]
pub struct CorridorSequence {
    corridors: Vec<Corridor>,
    rects: Vec<Rect>,
}

impl CorridorSequence {
    pub fn len(&self) -> usize {
        self.corridors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.corridors.is_empty()
    }

    pub fn corridors(&self) -> &[Corridor] {
        &self.corridors
    }

    pub fn rect(&self, i: usize) -> &Rect {
        &self.rects[i]
    }

    pub fn rects(&self) -> &[Rect] {
        &self.rects
    }

    /// Overlap of consecutive corridors `i-1` and `i`.
    pub fn overlap(&self, i: usize) -> Rect {
        self.rects[i - 1].intersect(&self.rects[i])
    }

    /// Membership of a vehicle-center position in some inflated corridor.
    pub fn admits(&self, p: Vec2, half: Vec2, tol: f64) -> bool {
        self.rects
            .iter()
            .any(|r| r.shrink(half).contains(p, tol))
    }

    /// JSON export of the rectangles (meters) for plotting and the OCP
    /// baseline.
    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize, Deserialize)]
        struct R {
            x_min: f64,
            x_max: f64,
            y_min: f64,
            y_max: f64,
        }
        serde_json::to_value(
            self.rects
                .iter()
                .map(|r| R {
                    x_min: r.min.x,
                    x_max: r.max.x,
                    y_min: r.min.y,
                    y_max: r.max.y,
                })
                .collect::<Vec<_>>(),
        )
        .unwrap()
    }
}

/// Shortest 4-connected path between free cells by breadth-first search.
/// Deterministic: neighbors expanded in +x, -x, +y, -y order.
pub fn shortest_cell_path(grid: &OccupancyGrid, start: Cell, goal: Cell) -> Result<Vec<Cell>> {
    if grid.is_occupied(start) || grid.is_occupied(goal) {
        return Err(Error::NoPath);
    }
    if start == goal {
        return Ok(vec![start]);
    }
    let cols = grid.cols();
    let index = |c: Cell| c.0 * cols + c.1;
    let mut parent: Vec<Option<Cell>> = vec![None; grid.rows() * cols];
    let mut visited = vec![false; grid.rows() * cols];
    visited[index(start)] = true;
    let mut queue = VecDeque::from([start]);
    'search: while let Some(cell) = queue.pop_front() {
        let (r, c) = (cell.0 as isize, cell.1 as isize);
        for (nr, nc) in [(r, c + 1), (r, c - 1), (r + 1, c), (r - 1, c)] {
            if !grid.in_bounds(nr, nc) {
                continue;
            }
            let next = (nr as usize, nc as usize);
            if visited[index(next)] || grid.is_occupied(next) {
                continue;
            }
            visited[index(next)] = true;
            parent[index(next)] = Some(cell);
            if next == goal {
                break 'search;
            }
            queue.push_back(next);
        }
    }
    if !visited[index(goal)] {
        return Err(Error::NoPath);
    }
    let mut path = vec![goal];
    while let Some(prev) = parent[index(*path.last().unwrap())] {
        path.push(prev);
    }
    path.reverse();
    Ok(path)
}

/// Snake ordering of a footprint cell block (1, 2 or 4 cells) so consecutive
/// cells are 4-adjacent and the sequence ends (or starts) at `anchor`.
fn snake_order(cells: &[Cell], anchor: Cell, anchor_last: bool) -> Vec<Cell> {
    debug_assert!(cells.contains(&anchor));
    let mut out: Vec<Cell> = match cells.len() {
        1 => vec![anchor],
        2 => {
            let other = *cells.iter().find(|&&c| c != anchor).unwrap();
            vec![other, anchor]
        }
        4 => {
            let (r, c) = anchor;
            let ro = cells.iter().map(|c| c.0).find(|&x| x != r).unwrap();
            let co = cells.iter().map(|c| c.1).find(|&x| x != c).unwrap();
            vec![(r, co), (ro, co), (ro, c), (r, c)]
        }
        n => unreachable!("footprint covers {n} cells; grid cells admit the vehicle"),
    };
    if !anchor_last {
        out.reverse();
    }
    out
}

/// Extend the BFS path with the cells covered by the start and goal
/// footprints, removing adjacent duplicates.
pub fn extend_path(path: &[Cell], scenario: &Scenario) -> Result<Vec<Cell>> {
    assert!(!path.is_empty());
    let s0 = occupied_cells(scenario.p0, &scenario.vehicle, &scenario.grid)?;
    let sn = occupied_cells(scenario.pn, &scenario.vehicle, &scenario.grid)?;
    let mut extended = snake_order(&s0, path[0], true);
    extended.extend_from_slice(path);
    extended.extend(snake_order(&sn, *path.last().unwrap(), false));
    extended.dedup();
    Ok(extended)
}

/// Split the extended path into maximal same-row-or-column runs; each new
/// run starts at the previous run's last cell so consecutive corridors share
/// a cell.
fn split_into_runs(path: &[Cell]) -> Vec<Corridor> {
    let mut runs: Vec<Corridor> = vec![Corridor::from_cell(path[0])];
    let mut run_cells = vec![path[0]];
    for &cell in &path[1..] {
        let last = *run_cells.last().unwrap();
        let same_row = run_cells.iter().all(|c| c.0 == cell.0);
        let same_col = run_cells.iter().all(|c| c.1 == cell.1);
        if same_row || same_col {
            runs.last_mut().unwrap().include(cell);
            run_cells.push(cell);
        } else {
            let mut next = Corridor::from_cell(last);
            next.include(cell);
            runs.push(next);
            run_cells = vec![last, cell];
        }
    }
    runs
}

fn can_expand(grid: &OccupancyGrid, rows: (isize, isize), cols: (isize, isize)) -> bool {
    for r in rows.0..=rows.1 {
        for c in cols.0..=cols.1 {
            if !grid.in_bounds(r, c) || grid.is_occupied((r as usize, c as usize)) {
                return false;
            }
        }
    }
    true
}

/// One full enlargement pass: each corridor attempts its four sides in
/// -x, +x, -y, +y order, expanding by one cell row/column when every newly
/// covered cell is free and inside the grid.
fn grow_pass(corridors: &mut [Corridor], grid: &OccupancyGrid) -> bool {
    let mut grew = false;
    for c in corridors.iter_mut() {
        let rows = (c.row_min as isize, c.row_max as isize);
        if c.col_min > 0 && can_expand(grid, rows, (c.col_min as isize - 1, c.col_min as isize - 1)) {
            c.col_min -= 1;
            grew = true;
        }
        let new_col = c.col_max as isize + 1;
        if can_expand(grid, rows, (new_col, new_col)) {
            c.col_max += 1;
            grew = true;
        }
        let cols = (c.col_min as isize, c.col_max as isize);
        if c.row_min > 0 && can_expand(grid, (c.row_min as isize - 1, c.row_min as isize - 1), cols) {
            c.row_min -= 1;
            grew = true;
        }
        let new_row = c.row_max as isize + 1;
        if can_expand(grid, (new_row, new_row), cols) {
            c.row_max += 1;
            grew = true;
        }
    }
    grew
}

/// Remove corridor `i` when it is covered by its neighbors' union or when
/// its neighbors already intersect. Scans in increasing `i`, restarting
/// after each removal.
fn prune(corridors: &mut Vec<Corridor>) {
    'restart: loop {
        for i in 0..corridors.len() {
            if corridors.len() == 1 {
                return;
            }
            let prev = if i > 0 { Some(&corridors[i - 1]) } else { None };
            let next = corridors.get(i + 1);
            let neighbors_touch = match (prev, next) {
                (Some(a), Some(b)) => a.intersects(b),
                _ => false,
            };
            // removing an interior corridor must leave its neighbors
            // sharing cells, or the sequence loses a usable overlap
            let removable = match (prev, next) {
                (Some(a), Some(b)) => a.intersects(b),
                _ => true,
            };
            if neighbors_touch || (removable && corridors[i].covered_by(prev, next)) {
                corridors.remove(i);
                continue 'restart;
            }
        }
        return;
    }
}

/// Build the corridor sequence from the extended cell path: split into runs,
/// grow to a fixed point with pruning after every pass.
pub fn build_corridors(extended_path: &[Cell], grid: &OccupancyGrid) -> Result<CorridorSequence> {
    assert!(!extended_path.is_empty());
    let mut corridors = split_into_runs(extended_path);
    prune(&mut corridors);
    loop {
        let grew = grow_pass(&mut corridors, grid);
        prune(&mut corridors);
        if !grew {
            break;
        }
    }
    if corridors.is_empty() {
        return Err(Error::DegenerateSequence);
    }
    let rects = corridors.iter().map(|c| c.rect(grid)).collect();
    Ok(CorridorSequence { corridors, rects })
}

/// Full pipeline: BFS path, endpoint extension, corridor construction.
pub fn corridors_for(scenario: &Scenario) -> Result<CorridorSequence> {
    let start = scenario
        .grid
        .cell_of(scenario.p0)
        .ok_or(Error::OutOfBounds)?;
    let goal = scenario
        .grid
        .cell_of(scenario.pn)
        .ok_or(Error::OutOfBounds)?;
    let path = shortest_cell_path(&scenario.grid, start, goal)?;
    let extended = extend_path(&path, scenario)?;
    build_corridors(&extended, &scenario.grid)
}
