//! Text formats for rule tables and grids.
//!
//! Rule table: one line of 512 `0`/`1` characters, character `i` is the
//! output for pattern code `i`.
//!
//! Grid: a header line `W H BOUNDARY` (`torus` or `dead`), then `H` lines of
//! `W` characters, `.` dead and `#` alive. Several grids may be concatenated
//! into one trajectory file.

use std::io::{BufRead, Write};

use crate::ca::{Boundary, Grid, RuleTable, PATTERN_COUNT};
use crate::error::{Error, Result};

pub fn table_to_string(table: &RuleTable) -> String {
    let mut s: String = table
        .outputs()
        .iter()
        .map(|&v| if v == 1 { '1' } else { '0' })
        .collect();
    s.push('\n');
    s
}

pub fn parse_table(text: &str) -> Result<RuleTable> {
    let line = text.strip_suffix('\n').unwrap_or(text);
    let line = line.strip_suffix('\r').unwrap_or(line);
    if line.len() != PATTERN_COUNT {
        return Err(Error::Parse {
            line: 1,
            msg: format!(
                "rule table must have {PATTERN_COUNT} characters, found {}",
                line.chars().count()
            ),
        });
    }
    let outputs = line
        .chars()
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            other => Err(Error::Parse {
                line: 1,
                msg: format!("unexpected character `{other}`"),
            }),
        })
        .collect::<Result<Vec<u8>>>()?;
    RuleTable::from_outputs(&outputs)
}

pub fn write_grid<W: Write>(mut out: W, grid: &Grid) -> Result<()> {
    writeln!(
        out,
        "{} {} {}",
        grid.width(),
        grid.height(),
        grid.boundary().as_str()
    )?;
    for row in grid.cells().chunks(grid.width()) {
        let line: String = row
            .iter()
            .map(|&c| if c == 1 { '#' } else { '.' })
            .collect();
        writeln!(out, "{line}")?;
    }
    Ok(())
}

pub fn grid_to_string(grid: &Grid) -> String {
    let mut buf = Vec::new();
    write_grid(&mut buf, grid).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("grid text is ASCII")
}

/// Reads every grid in a (possibly concatenated) grid file.
pub fn read_grids<R: BufRead>(input: R) -> Result<Vec<Grid>> {
    let mut grids = Vec::new();
    let mut lines = input.lines().enumerate().filter(|(_, l)| match l {
        Ok(l) => !l.trim().is_empty(),
        Err(_) => true,
    });
    while let Some((idx, header)) = lines.next() {
        let header = header?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        let bad_header = || Error::Parse {
            line: idx + 1,
            msg: format!("bad grid header `{header}`"),
        };
        if parts.len() != 3 {
            return Err(bad_header());
        }
        let width: usize = parts[0].parse().map_err(|_| bad_header())?;
        let height: usize = parts[1].parse().map_err(|_| bad_header())?;
        let boundary: Boundary = parts[2].parse().map_err(|_| bad_header())?;
        let mut cells = Vec::with_capacity(width * height);
        for row in 0..height {
            let (ln, line) = lines.next().ok_or_else(|| Error::Parse {
                line: idx + 2 + row,
                msg: format!("expected {height} grid rows, found {row}"),
            })?;
            let line = line?;
            let line = line.trim_end();
            if line.chars().count() != width {
                return Err(Error::Parse {
                    line: ln + 1,
                    msg: format!("expected {width} cells"),
                });
            }
            for c in line.chars() {
                cells.push(match c {
                    '.' => 0,
                    '#' => 1,
                    other => {
                        return Err(Error::Parse {
                            line: ln + 1,
                            msg: format!("unexpected character `{other}`"),
                        })
                    }
                });
            }
        }
        grids.push(Grid::from_cells(width, height, boundary, cells)?);
    }
    Ok(grids)
}

pub fn parse_grid(text: &str) -> Result<Grid> {
    let mut grids = read_grids(text.as_bytes())?;
    match grids.len() {
        1 => Ok(grids.pop().unwrap()),
        n => Err(Error::Parse {
            line: 1,
            msg: format!("expected one grid, found {n}"),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ca::{rule_table_of, BuiltinRule};

    #[test]
    fn table_file_round_trip() {
        let gol = rule_table_of(BuiltinRule::GameOfLife);
        let text = table_to_string(&gol);
        assert_eq!(text.len(), 513);
        assert!(text.ends_with('\n'));
        assert_eq!(parse_table(&text).unwrap(), gol);
    }

    #[test]
    fn table_parse_errors() {
        assert!(parse_table("0101\n").is_err());
        let mut bad = "0".repeat(511);
        bad.push('x');
        assert!(parse_table(&bad).is_err());
    }

    #[test]
    fn grid_file_example() {
        let text = "5 3 dead\n.....\n..#..\n#...#\n";
        let g = parse_grid(text).unwrap();
        assert_eq!(g.width(), 5);
        assert_eq!(g.boundary(), Boundary::DeadBorder);
        assert_eq!(g.alive_count(), 3);
        assert_eq!(grid_to_string(&g), text);
    }

    #[test]
    fn concatenated_grids() {
        let text = "3 3 torus\n...\n.#.\n...\n3 3 torus\n###\n...\n...\n";
        let grids = read_grids(text.as_bytes()).unwrap();
        assert_eq!(grids.len(), 2);
        assert_eq!(grids[1].alive_count(), 3);
    }

    #[test]
    fn malformed_grids() {
        assert!(parse_grid("3 3 torus\n...\n.#.\n").is_err());
        assert!(parse_grid("3 3 wrap\n...\n...\n...\n").is_err());
        assert!(parse_grid("3 3 torus\n...\n.x.\n...\n").is_err());
        assert!(parse_grid("3 3 torus\n....\n...\n...\n").is_err());
    }
}
