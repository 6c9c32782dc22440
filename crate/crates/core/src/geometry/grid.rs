//! Occupancy-grid ingestion: PGM (P2/P5) images or a plain 0/1 text grid
//! with a `width height` header line.
//!
//! Row 0 of the file is the top of the map. A cell is occupied when its
//! occupancy exceeds 0.5; for PGM images occupancy is `1 - value / maxval`
//! (dark pixels are obstacles).

use super::environment::{Bounds, Environment};
use super::shape::{ConvexShape, Point};
use super::GeometryError;

const OCCUPIED_THRESHOLD: f64 = 0.5;

/// Boolean occupancy raster, row-major, row 0 at the top.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    pub width: usize,
    pub height: usize,
    pub cells: Vec<bool>,
}

impl OccupancyGrid {
    pub fn occupied(&self, row: usize, col: usize) -> bool {
        self.cells[row * self.width + col]
    }

    pub fn parse(bytes: &[u8]) -> Result<Self, GeometryError> {
        if bytes.starts_with(b"P2") || bytes.starts_with(b"P5") {
            parse_pgm(bytes)
        } else {
            parse_ascii(bytes)
        }
    }
}

/// Converts a grid file into an environment with square (or merged
/// rectangular) obstacles. `resolution` is meters per cell.
pub fn import_occupancy_grid(
    bytes: &[u8],
    resolution: f64,
    merge: bool,
) -> Result<Environment, GeometryError> {
    if !(resolution > 0.0) || !resolution.is_finite() {
        return Err(GeometryError::Parameter(format!(
            "resolution must be positive, got {resolution}"
        )));
    }
    let grid = OccupancyGrid::parse(bytes)?;
    let rects = if merge {
        merge_rectangles(&grid)
    } else {
        let mut cells = Vec::new();
        for r in 0..grid.height {
            for c in 0..grid.width {
                if grid.occupied(r, c) {
                    cells.push(CellRect { row0: r, row1: r + 1, col0: c, col1: c + 1 });
                }
            }
        }
        cells
    };
    let h = grid.height as f64;
    let obstacles = rects
        .iter()
        .map(|rc| {
            let x0 = rc.col0 as f64 * resolution;
            let x1 = rc.col1 as f64 * resolution;
            let y0 = (h - rc.row1 as f64) * resolution;
            let y1 = (h - rc.row0 as f64) * resolution;
            ConvexShape::polygon(vec![
                Point::new(x0, y0),
                Point::new(x1, y0),
                Point::new(x1, y1),
                Point::new(x0, y1),
            ])
        })
        .collect::<Result<Vec<_>, _>>()?;
    let bounds = Bounds::new(
        [0.0, 0.0],
        [grid.width as f64 * resolution, h * resolution],
    )?;
    Environment::new(bounds, obstacles, 0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct CellRect {
    row0: usize,
    row1: usize,
    col0: usize,
    col1: usize,
}

/// Greedy merge: horizontal runs per row, stacked while the next row has an
/// identical run.
fn merge_rectangles(grid: &OccupancyGrid) -> Vec<CellRect> {
    let mut done = Vec::new();
    let mut open: Vec<CellRect> = Vec::new();
    for r in 0..grid.height {
        let mut runs = Vec::new();
        let mut c = 0;
        while c < grid.width {
            if grid.occupied(r, c) {
                let start = c;
                while c < grid.width && grid.occupied(r, c) {
                    c += 1;
                }
                runs.push((start, c));
            } else {
                c += 1;
            }
        }
        let mut next_open = Vec::with_capacity(runs.len());
        for (c0, c1) in runs {
            if let Some(pos) = open.iter().position(|o| o.col0 == c0 && o.col1 == c1) {
                let mut rect = open.swap_remove(pos);
                rect.row1 = r + 1;
                next_open.push(rect);
            } else {
                next_open.push(CellRect { row0: r, row1: r + 1, col0: c0, col1: c1 });
            }
        }
        done.append(&mut open);
        open = next_open;
    }
    done.append(&mut open);
    done.sort_by_key(|rc| (rc.row0, rc.col0));
    done
}

struct Tokenizer<'a> {
    bytes: &'a [u8],
    pos: usize,
    line: usize,
}

impl<'a> Tokenizer<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Tokenizer { bytes, pos: 0, line: 1 }
    }

    fn error(&self, message: impl Into<String>) -> GeometryError {
        GeometryError::GridParse {
            line: self.line,
            offset: self.pos,
            message: message.into(),
        }
    }

    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'\n' => {
                    self.line += 1;
                    self.pos += 1;
                }
                b' ' | b'\t' | b'\r' => self.pos += 1,
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                _ => break,
            }
        }
    }

    fn token(&mut self) -> Result<&'a [u8], GeometryError> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("unexpected end of file"));
        }
        Ok(&self.bytes[start..self.pos])
    }

    fn number(&mut self) -> Result<usize, GeometryError> {
        self.skip_space_and_comments();
        let start = self.pos;
        let tok = self.token()?;
        std::str::from_utf8(tok)
            .ok()
            .and_then(|s| s.parse::<usize>().ok())
            .ok_or_else(|| {
                let mut e = self.error(format!(
                    "expected an unsigned integer, found {:?}",
                    String::from_utf8_lossy(tok)
                ));
                if let GeometryError::GridParse { offset, .. } = &mut e {
                    *offset = start;
                }
                e
            })
    }
}

fn parse_pgm(bytes: &[u8]) -> Result<OccupancyGrid, GeometryError> {
    let mut tk = Tokenizer::new(bytes);
    let magic = tk.token()?;
    let binary = magic == b"P5";
    let width = tk.number()?;
    let height = tk.number()?;
    let maxval = tk.number()?;
    if width == 0 || height == 0 {
        return Err(tk.error("grid dimensions must be positive"));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(tk.error(format!("invalid maxval {maxval}")));
    }
    let n = width * height;
    let mut values = Vec::with_capacity(n);
    if binary {
        // exactly one whitespace byte separates the header from the raster
        if tk.pos >= bytes.len() || !bytes[tk.pos].is_ascii_whitespace() {
            return Err(tk.error("missing separator after PGM header"));
        }
        tk.pos += 1;
        let wide = maxval > 255;
        let need = if wide { 2 * n } else { n };
        if bytes.len() - tk.pos < need {
            return Err(GeometryError::GridParse {
                line: tk.line,
                offset: bytes.len(),
                message: format!(
                    "raster truncated: need {need} bytes, found {}",
                    bytes.len() - tk.pos
                ),
            });
        }
        let data = &bytes[tk.pos..tk.pos + need];
        if wide {
            values.extend(data.chunks(2).map(|c| u16::from_be_bytes([c[0], c[1]]) as usize));
        } else {
            values.extend(data.iter().map(|&b| b as usize));
        }
    } else {
        for _ in 0..n {
            let v = tk.number()?;
            if v > maxval {
                return Err(tk.error(format!("pixel value {v} exceeds maxval {maxval}")));
            }
            values.push(v);
        }
    }
    if values.iter().any(|&v| v > maxval) {
        return Err(GeometryError::GridParse {
            line: tk.line,
            offset: tk.pos,
            message: "pixel value exceeds maxval".into(),
        });
    }
    let cells = values
        .iter()
        .map(|&v| 1.0 - v as f64 / maxval as f64 > OCCUPIED_THRESHOLD)
        .collect();
    Ok(OccupancyGrid { width, height, cells })
}

fn parse_ascii(bytes: &[u8]) -> Result<OccupancyGrid, GeometryError> {
    let text = std::str::from_utf8(bytes).map_err(|e| GeometryError::GridParse {
        line: 1,
        offset: e.valid_up_to(),
        message: "grid file is not valid UTF-8".into(),
    })?;
    let mut offset = 0;
    let mut lines = text.split_inclusive('\n').enumerate();
    let (width, height) = loop {
        let Some((i, raw)) = lines.next() else {
            return Err(GeometryError::GridParse {
                line: 1,
                offset,
                message: "missing `width height` header".into(),
            });
        };
        let line_start = offset;
        offset += raw.len();
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let parts: Vec<_> = trimmed.split_whitespace().collect();
        let parsed = (parts.len() == 2)
            .then(|| Some((parts[0].parse::<usize>().ok()?, parts[1].parse::<usize>().ok()?)))
            .flatten();
        match parsed {
            Some((w, h)) if w > 0 && h > 0 => break (w, h),
            _ => {
                return Err(GeometryError::GridParse {
                    line: i + 1,
                    offset: line_start,
                    message: format!("bad header {trimmed:?}, expected `width height`"),
                })
            }
        }
    };
    let mut cells = Vec::with_capacity(width * height);
    let mut rows = 0;
    for (i, raw) in lines {
        let line_start = offset;
        offset += raw.len();
        let trimmed = raw.trim_end();
        if trimmed.trim().is_empty() {
            continue;
        }
        if rows == height {
            return Err(GeometryError::GridParse {
                line: i + 1,
                offset: line_start,
                message: format!("more than {height} rows"),
            });
        }
        let mut count = 0;
        for (j, ch) in trimmed.char_indices() {
            match ch {
                '0' => cells.push(false),
                '1' => cells.push(true),
                ' ' | '\t' => continue,
                other => {
                    return Err(GeometryError::GridParse {
                        line: i + 1,
                        offset: line_start + j,
                        message: format!("unexpected character {other:?}"),
                    })
                }
            }
            count += 1;
        }
        if count != width {
            return Err(GeometryError::GridParse {
                line: i + 1,
                offset: line_start,
                message: format!("row has {count} cells, expected {width}"),
            });
        }
        rows += 1;
    }
    if rows != height {
        return Err(GeometryError::GridParse {
            line: 0,
            offset,
            message: format!("found {rows} rows, expected {height}"),
        });
    }
    Ok(OccupancyGrid { width, height, cells })
}
