//! Binary 2D grids, 3x3 pattern codes, rule tables and the one-step update.
//!
//! A pattern code packs a 3x3 block row-major into 9 bits: bit 0 is the
//! top-left cell, bit 4 the centre, bit 8 the bottom-right. Every local rule
//! over that neighbourhood is a 512-entry [`RuleTable`].

use std::cell::Cell;
use std::fmt;

use crate::error::{Error, Result};

pub const PATTERN_COUNT: usize = 512;
pub const CENTRE_BIT: u16 = 4;

/// A 3x3 block of binary cells, indexed `[row][col]`.
pub type Block = [[u8; 3]; 3];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum Boundary {
    #[default]
    Torus,
    DeadBorder,
}

impl Boundary {
    pub fn as_str(self) -> &'static str {
        match self {
            Boundary::Torus => "torus",
            Boundary::DeadBorder => "dead",
        }
    }
}

impl std::str::FromStr for Boundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "torus" => Ok(Boundary::Torus),
            "dead" => Ok(Boundary::DeadBorder),
            other => Err(Error::InvalidInput(format!("unknown boundary `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PatternCode(u16);

impl PatternCode {
    pub fn new(code: u16) -> Result<Self> {
        if (code as usize) < PATTERN_COUNT {
            Ok(PatternCode(code))
        } else {
            Err(Error::InvalidInput(format!(
                "pattern code {code} out of range"
            )))
        }
    }

    /// Caller guarantees `code < 512`.
    #[inline]
    pub(crate) fn new_unchecked(code: u16) -> Self {
        debug_assert!((code as usize) < PATTERN_COUNT);
        PatternCode(code)
    }

    #[inline]
    pub fn value(self) -> u16 {
        self.0
    }

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }

    #[inline]
    pub fn bit(self, b: u16) -> u8 {
        ((self.0 >> b) & 1) as u8
    }

    #[inline]
    pub fn centre(self) -> u8 {
        self.bit(CENTRE_BIT)
    }

    /// Alive neighbours, excluding the centre.
    #[inline]
    pub fn neighbour_count(self) -> u32 {
        self.0.count_ones() - self.centre() as u32
    }

    pub fn all() -> impl Iterator<Item = PatternCode> {
        (0..PATTERN_COUNT as u16).map(PatternCode)
    }

    pub fn to_block(self) -> Block {
        let mut block = [[0u8; 3]; 3];
        for (b, cell) in block.iter_mut().flatten().enumerate() {
            *cell = self.bit(b as u16);
        }
        block
    }
}

impl fmt::Display for PatternCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub fn encode_pattern(block: &Block) -> Result<PatternCode> {
    let mut code = 0u16;
    for (b, &cell) in block.iter().flatten().enumerate() {
        match cell {
            0 => {}
            1 => code |= 1 << b,
            v => return Err(Error::InvalidInput(format!("non-binary cell value {v}"))),
        }
    }
    Ok(PatternCode(code))
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Grid {
    width: usize,
    height: usize,
    boundary: Boundary,
    cells: Vec<u8>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "Grid {}x{} {}",
            self.width,
            self.height,
            self.boundary.as_str()
        )?;
        for row in self.cells.chunks(self.width) {
            let line: String = row
                .iter()
                .map(|&c| if c == 1 { '#' } else { '.' })
                .collect();
            writeln!(f, "{line}")?;
        }
        Ok(())
    }
}

impl Grid {
    pub fn new(width: usize, height: usize, boundary: Boundary) -> Result<Self> {
        check_dims(width, height)?;
        Ok(Grid {
            width,
            height,
            boundary,
            cells: vec![0; width * height],
        })
    }

    /// Cells are row-major, `cells[y * width + x]`.
    pub fn from_cells(
        width: usize,
        height: usize,
        boundary: Boundary,
        cells: Vec<u8>,
    ) -> Result<Self> {
        check_dims(width, height)?;
        if cells.len() != width * height {
            return Err(Error::InvalidInput(format!(
                "expected {} cells, got {}",
                width * height,
                cells.len()
            )));
        }
        if let Some(v) = cells.iter().find(|&&c| c > 1) {
            return Err(Error::InvalidInput(format!("non-binary cell value {v}")));
        }
        Ok(Grid {
            width,
            height,
            boundary,
            cells,
        })
    }

    /// Build a grid with the listed `(x, y)` cells alive.
    pub fn with_alive(
        width: usize,
        height: usize,
        boundary: Boundary,
        alive: &[(usize, usize)],
    ) -> Result<Self> {
        let mut grid = Grid::new(width, height, boundary)?;
        for &(x, y) in alive {
            grid.check_coords(x, y)?;
            grid.cells[y * width + x] = 1;
        }
        Ok(grid)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn cells(&self) -> &[u8] {
        &self.cells
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        x < self.width && y < self.height
    }

    fn check_coords(&self, x: usize, y: usize) -> Result<()> {
        if self.contains(x, y) {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!(
                "({x}, {y}) outside {}x{} grid",
                self.width, self.height
            )))
        }
    }

    /// Panics when `(x, y)` is outside the grid.
    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        assert!(self.contains(x, y), "({x}, {y}) outside grid");
        self.cells[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, alive: bool) -> Result<()> {
        self.check_coords(x, y)?;
        self.cells[y * self.width + x] = alive as u8;
        Ok(())
    }

    pub fn flip(&mut self, x: usize, y: usize) -> Result<()> {
        self.check_coords(x, y)?;
        self.cells[y * self.width + x] ^= 1;
        Ok(())
    }

    pub fn alive_count(&self) -> usize {
        self.cells.iter().map(|&c| c as usize).sum()
    }

    /// Reads a cell at signed coordinates, applying the boundary policy.
    fn read(&self, x: isize, y: isize) -> u8 {
        let (w, h) = (self.width as isize, self.height as isize);
        match self.boundary {
            Boundary::Torus => self.cells[(y.rem_euclid(h) * w + x.rem_euclid(w)) as usize],
            Boundary::DeadBorder => {
                if x < 0 || y < 0 || x >= w || y >= h {
                    0
                } else {
                    self.cells[(y * w + x) as usize]
                }
            }
        }
    }

    /// Cyclic shift so that the cell at `(x, y)` moves to `(x + dx, y + dy)`.
    pub fn translated(&self, dx: isize, dy: isize) -> Grid {
        let mut out = self.clone();
        let (w, h) = (self.width as isize, self.height as isize);
        for y in 0..h {
            for x in 0..w {
                let nx = (x + dx).rem_euclid(w);
                let ny = (y + dy).rem_euclid(h);
                out.cells[(ny * w + nx) as usize] = self.cells[(y * w + x) as usize];
            }
        }
        out
    }

    pub fn same_shape(&self, other: &Grid) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Number of cells that differ. Panics on a shape mismatch.
    pub fn mismatches(&self, other: &Grid) -> usize {
        assert!(self.same_shape(other), "grid shape mismatch");
        self.cells
            .iter()
            .zip(&other.cells)
            .filter(|(a, b)| a != b)
            .count()
    }
}

fn check_dims(width: usize, height: usize) -> Result<()> {
    if width < 3 || height < 3 {
        return Err(Error::InvalidInput(format!(
            "grid must be at least 3x3, got {width}x{height}"
        )));
    }
    Ok(())
}

pub fn neighbourhood(grid: &Grid, x: usize, y: usize) -> Result<Block> {
    grid.check_coords(x, y)?;
    let mut block = [[0u8; 3]; 3];
    for (r, row) in block.iter_mut().enumerate() {
        for (c, cell) in row.iter_mut().enumerate() {
            *cell = grid.read(x as isize + c as isize - 1, y as isize + r as isize - 1);
        }
    }
    Ok(block)
}

/// Pattern code of the neighbourhood around `(x, y)`.
pub fn pattern_at(grid: &Grid, x: usize, y: usize) -> Result<PatternCode> {
    encode_pattern(&neighbourhood(grid, x, y)?)
}

/// Anything that maps a pattern code to the centre cell's next state.
pub trait LocalRule {
    fn next_state(&self, code: PatternCode) -> u8;
}

impl<T: LocalRule + ?Sized> LocalRule for &T {
    #[inline]
    fn next_state(&self, code: PatternCode) -> u8 {
        (**self).next_state(code)
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RuleTable {
    outputs: [u8; PATTERN_COUNT],
}

impl fmt::Debug for RuleTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RuleTable({} ones)", self.ones())
    }
}

impl Default for RuleTable {
    fn default() -> Self {
        RuleTable::constant(0)
    }
}

impl RuleTable {
    pub fn constant(value: u8) -> Self {
        RuleTable {
            outputs: [value & 1; PATTERN_COUNT],
        }
    }

    pub fn from_fn(mut f: impl FnMut(PatternCode) -> u8) -> Self {
        let mut outputs = [0u8; PATTERN_COUNT];
        for code in PatternCode::all() {
            outputs[code.index()] = f(code) & 1;
        }
        RuleTable { outputs }
    }

    pub fn from_outputs(outputs: &[u8]) -> Result<Self> {
        if outputs.len() != PATTERN_COUNT {
            return Err(Error::InvalidInput(format!(
                "rule table needs {PATTERN_COUNT} entries, got {}",
                outputs.len()
            )));
        }
        if let Some(v) = outputs.iter().find(|&&v| v > 1) {
            return Err(Error::InvalidInput(format!("non-binary table entry {v}")));
        }
        let mut table = [0u8; PATTERN_COUNT];
        table.copy_from_slice(outputs);
        Ok(RuleTable { outputs: table })
    }

    #[inline]
    pub fn get(&self, code: PatternCode) -> u8 {
        self.outputs[code.index()]
    }

    pub fn set(&mut self, code: PatternCode, value: u8) {
        self.outputs[code.index()] = value & 1;
    }

    pub fn outputs(&self) -> &[u8; PATTERN_COUNT] {
        &self.outputs
    }

    pub fn ones(&self) -> usize {
        self.outputs.iter().filter(|&&v| v == 1).count()
    }

    pub fn complement(&self) -> RuleTable {
        let mut outputs = self.outputs;
        outputs.iter_mut().for_each(|v| *v ^= 1);
        RuleTable { outputs }
    }
}

impl LocalRule for RuleTable {
    #[inline]
    fn next_state(&self, code: PatternCode) -> u8 {
        self.outputs[code.index() & (PATTERN_COUNT - 1)]
    }
}

pub fn hamming(a: &RuleTable, b: &RuleTable) -> usize {
    a.outputs
        .iter()
        .zip(&b.outputs)
        .filter(|(x, y)| x != y)
        .count()
}

pub const DEFAULT_CAVE_THRESHOLD: u8 = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BuiltinRule {
    GameOfLife,
    /// Alive next tick iff more than `threshold` neighbours are alive.
    CaveGenerator {
        threshold: u8,
    },
}

impl BuiltinRule {
    pub fn cave(threshold: u8) -> Result<Self> {
        if threshold > 8 {
            return Err(Error::InvalidInput(format!(
                "cave threshold {threshold} > 8"
            )));
        }
        Ok(BuiltinRule::CaveGenerator { threshold })
    }

    pub fn name(&self) -> &'static str {
        match self {
            BuiltinRule::GameOfLife => "gol",
            BuiltinRule::CaveGenerator { .. } => "cave",
        }
    }

    /// Next state from the centre value and the live-neighbour count.
    pub fn apply(&self, centre: u8, neighbours: u32) -> u8 {
        match *self {
            BuiltinRule::GameOfLife => {
                let alive = if centre == 1 {
                    neighbours == 2 || neighbours == 3
                } else {
                    neighbours == 3
                };
                alive as u8
            }
            BuiltinRule::CaveGenerator { threshold } => (neighbours > threshold as u32) as u8,
        }
    }

    pub fn table(&self) -> RuleTable {
        rule_table_of(*self)
    }
}

pub fn rule_table_of(rule: BuiltinRule) -> RuleTable {
    RuleTable::from_fn(|code| rule.apply(code.centre(), code.neighbour_count()))
}

/// Wraps a rule and counts every lookup. Used to check which component
/// consulted which model.
pub struct QueryCounter<R> {
    inner: R,
    queries: Cell<u64>,
}

impl<R: LocalRule> QueryCounter<R> {
    pub fn new(inner: R) -> Self {
        QueryCounter {
            inner,
            queries: Cell::new(0),
        }
    }

    pub fn queries(&self) -> u64 {
        self.queries.get()
    }

    pub fn reset(&self) {
        self.queries.set(0);
    }
}

impl<R: LocalRule> LocalRule for QueryCounter<R> {
    fn next_state(&self, code: PatternCode) -> u8 {
        self.queries.set(self.queries.get() + 1);
        self.inner.next_state(code)
    }
}

const KEEP_LEFT_TWO_COLUMNS: u16 = 0b011_011_011;

/// Synchronous update of every cell through `rule`, written into `out`.
/// `out` is resized and reshaped to match `grid`.
pub fn step_into<R: LocalRule + ?Sized>(grid: &Grid, rule: &R, out: &mut Grid) {
    let (w, h) = (grid.width, grid.height);
    out.width = w;
    out.height = h;
    out.boundary = grid.boundary;
    out.cells.resize(w * h, 0);

    let torus = grid.boundary == Boundary::Torus;
    let zero_row = vec![0u8; w];
    // columns[i] holds the vertical triple of column i - 1: top at bit 0,
    // middle at bit 3, bottom at bit 6.
    let mut columns = vec![0u16; w + 2];
    for y in 0..h {
        let mid = &grid.cells[y * w..(y + 1) * w];
        let up: &[u8] = if y > 0 {
            &grid.cells[(y - 1) * w..y * w]
        } else if torus {
            &grid.cells[(h - 1) * w..h * w]
        } else {
            &zero_row
        };
        let down: &[u8] = if y + 1 < h {
            &grid.cells[(y + 1) * w..(y + 2) * w]
        } else if torus {
            &grid.cells[0..w]
        } else {
            &zero_row
        };
        for (((col, &t), &m), &b) in columns[1..=w].iter_mut().zip(up).zip(mid).zip(down) {
            *col = t as u16 | (m as u16) << 3 | (b as u16) << 6;
        }
        if torus {
            columns[0] = columns[w];
            columns[w + 1] = columns[1];
        } else {
            columns[0] = 0;
            columns[w + 1] = 0;
        }

        let row_out = &mut out.cells[y * w..(y + 1) * w];
        let mut code = columns[0] << 1 | columns[1] << 2;
        for (cell, &right) in row_out.iter_mut().zip(&columns[2..]) {
            code = ((code >> 1) & KEEP_LEFT_TWO_COLUMNS) | right << 2;
            *cell = rule.next_state(PatternCode::new_unchecked(code));
        }
    }
}

pub fn step_grid<R: LocalRule + ?Sized>(grid: &Grid, rule: &R) -> Grid {
    let mut out = Grid {
        width: 0,
        height: 0,
        boundary: grid.boundary,
        cells: Vec::new(),
    };
    step_into(grid, rule, &mut out);
    out
}

/// Every cell's current pattern code, row-major.
pub fn pattern_codes(grid: &Grid) -> Vec<PatternCode> {
    // Reuse the stepping kernel with a rule that records instead of looking up.
    struct Recorder(std::cell::RefCell<Vec<PatternCode>>);
    impl LocalRule for Recorder {
        fn next_state(&self, code: PatternCode) -> u8 {
            self.0.borrow_mut().push(code);
            0
        }
    }
    let recorder = Recorder(std::cell::RefCell::new(Vec::with_capacity(
        grid.width * grid.height,
    )));
    step_grid(grid, &recorder);
    recorder.0.into_inner()
}
