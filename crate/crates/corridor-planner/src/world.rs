//! Environment and vehicle model: occupancy grid, footprint geometry and
//! map/scenario file I/O.
//!
//! World frame convention: x grows with the column index, y grows with the
//! row index, origin at the corner of cell (0, 0). Cells are square.

use crate::error::{Error, Result};
use crate::geom::{Rect, Vec2};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Rectangular vehicle with axis-aligned footprint and symmetric motion
/// bounds in each dimension.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Vehicle {
    /// Footprint extent along x [m].
    #[serde(rename = "W")]
    pub width: f64,
    /// Footprint extent along y [m].
    #[serde(rename = "L")]
    pub length: f64,
    pub v_max: f64,
    pub a_max: f64,
}

impl Vehicle {
    pub fn new(width: f64, length: f64, v_max: f64, a_max: f64) -> Result<Vehicle> {
        let v = Vehicle {
            width,
            length,
            v_max,
            a_max,
        };
        v.validate()?;
        Ok(v)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("W", self.width),
            ("L", self.length),
            ("v_max", self.v_max),
            ("a_max", self.a_max),
        ] {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::Validation(format!("vehicle {name} must be > 0")));
            }
        }
        Ok(())
    }

    /// Half extents (W/2, L/2), the inflation applied to corridor bounds.
    pub fn half_extents(&self) -> Vec2 {
        Vec2::new(self.width / 2.0, self.length / 2.0)
    }
}

/// Axis-aligned grid of square cells with occupancy flags. Row-major
/// storage, cell (row, col) covers
/// `[col*cell_size, (col+1)*cell_size] x [row*cell_size, (row+1)*cell_size]`
/// relative to `origin`.
#[derive(Debug, Clone)]
pub struct OccupancyGrid {
    rows: usize,
    cols: usize,
    cell_size: f64,
    origin: Vec2,
    occupied: Vec<bool>,
}

pub type Cell = (usize, usize); // (row, col)

impl OccupancyGrid {
    pub fn new(rows: usize, cols: usize, cell_size: f64, occupied: Vec<bool>) -> Result<OccupancyGrid> {
        if rows == 0 || cols == 0 {
            return Err(Error::Validation("grid must have positive dimensions".into()));
        }
        if !(cell_size > 0.0) || !cell_size.is_finite() {
            return Err(Error::Validation("cell_size must be > 0".into()));
        }
        if occupied.len() != rows * cols {
            return Err(Error::Validation("occupancy vector length mismatch".into()));
        }
        Ok(OccupancyGrid {
            rows,
            cols,
            cell_size,
            origin: Vec2::ZERO,
            occupied,
        })
    }

    pub fn empty(rows: usize, cols: usize, cell_size: f64) -> OccupancyGrid {
        OccupancyGrid::new(rows, cols, cell_size, vec![false; rows * cols]).unwrap()
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn origin(&self) -> Vec2 {
        self.origin
    }

    pub fn set_occupied(&mut self, cell: Cell, value: bool) {
        let idx = cell.0 * self.cols + cell.1;
        self.occupied[idx] = value;
    }

    pub fn is_occupied(&self, cell: Cell) -> bool {
        self.occupied[cell.0 * self.cols + cell.1]
    }

    pub fn is_free(&self, cell: Cell) -> bool {
        !self.is_occupied(cell)
    }

    pub fn in_bounds(&self, row: isize, col: isize) -> bool {
        row >= 0 && col >= 0 && (row as usize) < self.rows && (col as usize) < self.cols
    }

    pub fn num_occupied(&self) -> usize {
        self.occupied.iter().filter(|&&o| o).count()
    }

    /// Total world extent as a box.
    pub fn extent(&self) -> Rect {
        Rect::new(
            self.origin,
            self.origin + Vec2::new(self.cols as f64 * self.cell_size, self.rows as f64 * self.cell_size),
        )
    }

    pub fn cell_box(&self, cell: Cell) -> Rect {
        let lo = self.origin
            + Vec2::new(cell.1 as f64 * self.cell_size, cell.0 as f64 * self.cell_size);
        Rect::new(lo, lo + Vec2::new(self.cell_size, self.cell_size))
    }

    /// Cell containing the point (points on an interior boundary map to the
    /// higher-index cell; the far extent edge maps inward).
    pub fn cell_of(&self, p: Vec2) -> Option<Cell> {
        let rel = p - self.origin;
        let col = (rel.x / self.cell_size).floor() as isize;
        let row = (rel.y / self.cell_size).floor() as isize;
        let col = if col == self.cols as isize && rel.x <= self.cols as f64 * self.cell_size {
            col - 1
        } else {
            col
        };
        let row = if row == self.rows as isize && rel.y <= self.rows as f64 * self.cell_size {
            row - 1
        } else {
            row
        };
        if self.in_bounds(row, col) {
            Some((row as usize, col as usize))
        } else {
            None
        }
    }

    pub fn center_of(&self, cell: Cell) -> Vec2 {
        self.cell_box(cell).center()
    }
}

/// Closed footprint box of the vehicle centered at `p`.
pub fn footprint(p: Vec2, vehicle: &Vehicle) -> Rect {
    let h = vehicle.half_extents();
    Rect::new(p - h, p + h)
}

/// Cells whose interior overlaps the footprint interior with positive area.
/// Boundary-touching does not count, so a vehicle exactly filling one cell
/// occupies exactly that cell. Sorted by (row, col).
pub fn occupied_cells(p: Vec2, vehicle: &Vehicle, grid: &OccupancyGrid) -> Result<Vec<Cell>> {
    let fp = footprint(p, vehicle);
    let extent = grid.extent();
    if !extent.contains_rect(&fp, 0.0) {
        return Err(Error::OutOfBounds);
    }
    let cs = grid.cell_size;
    let range = |lo: f64, hi: f64| -> (usize, usize) {
        let first = (lo / cs).floor();
        let last = (hi / cs).ceil() - 1.0;
        (first.max(0.0) as usize, last as usize)
    };
    let rel_min = fp.min - grid.origin;
    let rel_max = fp.max - grid.origin;
    let (c0, c1) = range(rel_min.x, rel_max.x);
    let (r0, r1) = range(rel_min.y, rel_max.y);
    let mut cells = Vec::new();
    for r in r0..=r1.min(grid.rows - 1) {
        for c in c0..=c1.min(grid.cols - 1) {
            cells.push((r, c));
        }
    }
    Ok(cells)
}

/// A planning problem instance: environment, vehicle and endpoints.
/// Terminal velocity is implicitly zero.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub grid: OccupancyGrid,
    pub vehicle: Vehicle,
    pub p0: Vec2,
    pub pn: Vec2,
    pub v0: Vec2,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.vehicle.validate()?;
        for (name, p) in [("start", self.p0), ("goal", self.pn)] {
            let cells = occupied_cells(p, &self.vehicle, &self.grid).map_err(|_| {
                Error::Validation(format!("{name} footprint leaves the grid extent"))
            })?;
            if let Some(&cell) = cells.iter().find(|&&c| self.grid.is_occupied(c)) {
                return Err(Error::Validation(format!(
                    "{name} footprint overlaps occupied cell {cell:?}"
                )));
            }
        }
        if self.v0.norm_inf() > self.vehicle.v_max {
            return Err(Error::Validation(
                "initial velocity exceeds v_max".into(),
            ));
        }
        Ok(())
    }
}

/// Parse the text map format: `cells <rows> <cols> <cell_size_m>` followed
/// by `rows` lines of `.`/`#`, row 0 printed last.
pub fn load_map(text: &str) -> Result<OccupancyGrid> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::Parse { line: 1, reason: "empty map file".into() })?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 4 || parts[0] != "cells" {
        return Err(Error::Parse {
            line: 1,
            reason: "expected header `cells <rows> <cols> <cell_size_m>`".into(),
        });
    }
    let rows: usize = parts[1].parse().map_err(|_| Error::Parse {
        line: 1,
        reason: "rows must be a positive integer".into(),
    })?;
    let cols: usize = parts[2].parse().map_err(|_| Error::Parse {
        line: 1,
        reason: "cols must be a positive integer".into(),
    })?;
    let cell_size: f64 = parts[3].parse().map_err(|_| Error::Parse {
        line: 1,
        reason: "cell_size must be a number".into(),
    })?;
    let mut occupied = vec![false; rows * cols];
    for printed in 0..rows {
        let row = rows - 1 - printed; // row 0 printed last
        let (lineno, line) = lines.next().ok_or_else(|| Error::Parse {
            line: printed + 2,
            reason: format!("expected {rows} map rows, got {printed}"),
        })?;
        let chars: Vec<char> = line.trim_end().chars().collect();
        if chars.len() != cols {
            return Err(Error::Parse {
                line: lineno + 1,
                reason: format!("expected {cols} cells, got {}", chars.len()),
            });
        }
        for (col, ch) in chars.into_iter().enumerate() {
            occupied[row * cols + col] = match ch {
                '.' => false,
                '#' => true,
                other => {
                    return Err(Error::Parse {
                        line: lineno + 1,
                        reason: format!("unexpected cell character {other:?}"),
                    })
                }
            };
        }
    }
    OccupancyGrid::new(rows, cols, cell_size, occupied)
}

/// Inverse of [`load_map`]; reproduces the input byte-for-byte modulo
/// trailing whitespace.
pub fn serialize_map(grid: &OccupancyGrid) -> String {
    let mut out = format!("cells {} {} {}\n", grid.rows, grid.cols, grid.cell_size);
    for printed in 0..grid.rows {
        let row = grid.rows - 1 - printed;
        for col in 0..grid.cols {
            out.push(if grid.is_occupied((row, col)) { '#' } else { '.' });
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Serialize, Deserialize)]
struct ScenarioFile {
    map: String,
    vehicle: Vehicle,
    start: EndpointState,
    goal: Endpoint,
}

#[derive(Debug, Serialize, Deserialize)]
struct EndpointState {
    p: Vec2,
    v: Vec2,
}

#[derive(Debug, Serialize, Deserialize)]
struct Endpoint {
    p: Vec2,
}

/// Parse a scenario JSON document. The `map` field is either the map text
/// inline or a path resolved against `base_dir`.
pub fn load_scenario(text: &str, base_dir: Option<&Path>) -> Result<Scenario> {
    let file: ScenarioFile = serde_json::from_str(text)?;
    let grid = if file.map.starts_with("cells ") || file.map.contains('\n') {
        load_map(&file.map)?
    } else {
        let path = match base_dir {
            Some(dir) => dir.join(&file.map),
            None => file.map.clone().into(),
        };
        load_map(&std::fs::read_to_string(path)?)?
    };
    let scenario = Scenario {
        grid,
        vehicle: file.vehicle,
        p0: file.start.p,
        pn: file.goal.p,
        v0: file.start.v,
    };
    scenario.validate()?;
    Ok(scenario)
}

pub fn load_scenario_file(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)?;
    load_scenario(&text, path.parent())
}

/// Serialize with the map inline.
pub fn serialize_scenario(scenario: &Scenario) -> String {
    let file = ScenarioFile {
        map: serialize_map(&scenario.grid),
        vehicle: scenario.vehicle,
        start: EndpointState {
            p: scenario.p0,
            v: scenario.v0,
        },
        goal: Endpoint { p: scenario.pn },
    };
    serde_json::to_string_pretty(&file).expect("scenario serialization cannot fail")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_vehicle() -> Vehicle {
        Vehicle::new(1.0, 1.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn footprint_boxes() {
        let v = unit_vehicle();
        let fp = footprint(Vec2::ZERO, &v);
        assert_eq!(fp, Rect::from_bounds(-0.5, 0.5, -0.5, 0.5));

        let v2 = Vehicle::new(1.0, 2.0, 1.0, 1.0).unwrap();
        let fp2 = footprint(Vec2::new(2.0, 3.0), &v2);
        assert_eq!(fp2, Rect::from_bounds(1.5, 2.5, 2.0, 4.0));

        assert!(Vehicle::new(0.0, 0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn occupied_cells_exact_fit_and_offsets() {
        let v = unit_vehicle();
        let grid = OccupancyGrid::empty(8, 8, 1.0);
        let center = Vec2::new(3.5, 3.5); // center of cell (3,3)

        assert_eq!(occupied_cells(center, &v, &grid).unwrap(), vec![(3, 3)]);
        assert_eq!(
            occupied_cells(center + Vec2::new(0.25, 0.0), &v, &grid).unwrap(),
            vec![(3, 3), (3, 4)]
        );
        assert_eq!(
            occupied_cells(center + Vec2::new(0.25, 0.25), &v, &grid).unwrap(),
            vec![(3, 3), (3, 4), (4, 3), (4, 4)]
        );
    }

    #[test]
    fn occupied_cells_out_of_bounds() {
        let v = unit_vehicle();
        let grid = OccupancyGrid::empty(4, 4, 1.0);
        assert!(matches!(
            occupied_cells(Vec2::new(0.25, 2.0), &v, &grid),
            Err(Error::OutOfBounds)
        ));
    }

    #[test]
    fn map_parse_and_roundtrip() {
        let text = "cells 3 3 1\n...\n...\n...\n";
        let grid = load_map(text).unwrap();
        assert_eq!(grid.num_occupied(), 0);
        assert_eq!(serialize_map(&grid), text);

        // '#' at cell (1,1); row 0 printed last
        let text2 = "cells 3 3 0.5\n...\n.#.\n...\n";
        let grid2 = load_map(text2).unwrap();
        assert_eq!(grid2.num_occupied(), 1);
        assert!(grid2.is_occupied((1, 1)));
        assert_eq!(serialize_map(&grid2), text2);
    }

    #[test]
    fn map_parse_errors_carry_location() {
        let err = load_map("cells 3 3 1\n...\n..\n...\n").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn scenario_validation_rejects_blocked_start() {
        let map = "cells 3 3 1\n...\n...\n#..\n";
        let scenario = format!(
            r#"{{"map": "{}", "vehicle": {{"W": 0.8, "L": 0.8, "v_max": 1.0, "a_max": 1.0}},
                "start": {{"p": [0.5, 0.5], "v": [0.0, 0.0]}}, "goal": {{"p": [2.5, 2.5]}}}}"#,
            map.replace('\n', "\\n")
        );
        assert!(matches!(
            load_scenario(&scenario, None),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn scenario_roundtrip() {
        let grid = OccupancyGrid::empty(3, 3, 1.0);
        let s = Scenario {
            grid,
            vehicle: unit_vehicle(),
            p0: Vec2::new(0.5, 0.5),
            pn: Vec2::new(2.5, 2.5),
            v0: Vec2::ZERO,
        };
        let text = serialize_scenario(&s);
        let back = load_scenario(&text, None).unwrap();
        assert_eq!(back.p0, s.p0);
        assert_eq!(back.pn, s.pn);
        assert_eq!(back.grid.rows(), 3);
    }
}
