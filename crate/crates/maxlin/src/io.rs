//! CSV schemas: datasets (`x1,...,xp,y[,w]`), parameter blocks
//! (`component,coord1,...,coordp` with 1-based components), and grid results
//! (`mode,k,p,n,sigma,method,trials,median_error,finite_trials`). All floats
//! print in Rust's round-trip decimal form and parse locale-independently;
//! the only admitted non-finite token is `inf` in the grid median column.

use crate::error::{Error, Result};
use crate::grid::{GridMode, GridRow, Method};
use crate::linalg::DenseMatrix;
use crate::model::{Dataset, ParamBlocks};
use std::fmt::Write as _;
use std::path::Path;

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_f64(field: &str, line: usize, context: &str) -> Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|_| parse_err(line, format!("invalid number for {context}: {field:?}")))
}

fn parse_finite(field: &str, line: usize, context: &str) -> Result<f64> {
    let v = parse_f64(field, line, context)?;
    if !v.is_finite() {
        return Err(parse_err(line, format!("{context} must be finite, got {field:?}")));
    }
    Ok(v)
}

fn parse_usize(field: &str, line: usize, context: &str) -> Result<usize> {
    field
        .trim()
        .parse::<usize>()
        .map_err(|_| parse_err(line, format!("invalid count for {context}: {field:?}")))
}

fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty())
}

// ---------------------------------------------------------------------------
// Dataset CSV
// ---------------------------------------------------------------------------

pub fn dataset_to_csv(data: &Dataset) -> String {
    let p = data.p();
    let mut out = String::new();
    for c in 0..p {
        let _ = write!(out, "x{},", c + 1);
    }
    out.push('y');
    if data.w().is_some() {
        out.push_str(",w");
    }
    out.push('\n');
    for i in 0..data.n() {
        for v in data.row(i) {
            let _ = write!(out, "{v},");
        }
        let _ = write!(out, "{}", data.y()[i]);
        if let Some(w) = data.w() {
            let _ = write!(out, ",{}", w[i]);
        }
        out.push('\n');
    }
    out
}

pub fn parse_dataset_csv(text: &str) -> Result<Dataset> {
    let mut it = lines(text);
    let (hline, header) = it.next().ok_or_else(|| parse_err(1, "empty dataset file"))?;
    let fields: Vec<&str> = header.split(',').map(str::trim).collect();
    let has_w = fields.last() == Some(&"w");
    let y_pos = if has_w {
        fields.len().checked_sub(2)
    } else {
        fields.len().checked_sub(1)
    }
    .ok_or_else(|| parse_err(hline, "header too short"))?;
    if fields.get(y_pos) != Some(&"y") || y_pos == 0 {
        return Err(parse_err(hline, "expected header x1,...,xp,y[,w]"));
    }
    let p = y_pos;
    for (c, field) in fields[..p].iter().enumerate() {
        if *field != format!("x{}", c + 1) {
            return Err(parse_err(hline, format!("expected column x{}, got {field:?}", c + 1)));
        }
    }

    let width = fields.len();
    let mut xs = Vec::new();
    let mut y = Vec::new();
    let mut w = Vec::new();
    let mut n = 0usize;
    for (lno, line) in it {
        let row: Vec<&str> = line.split(',').collect();
        if row.len() != width {
            return Err(parse_err(lno, format!("expected {width} fields, got {}", row.len())));
        }
        for (c, field) in row[..p].iter().enumerate() {
            xs.push(parse_finite(field, lno, &format!("x{}", c + 1))?);
        }
        y.push(parse_finite(row[p], lno, "y")?);
        if has_w {
            w.push(parse_finite(row[p + 1], lno, "w")?);
        }
        n += 1;
    }
    if n == 0 {
        return Err(parse_err(hline, "dataset has no rows"));
    }
    let x = DenseMatrix::from_vec(n, p, xs)?;
    Dataset::new(x, y, if has_w { Some(w) } else { None })
}

// ---------------------------------------------------------------------------
// Parameter-block CSV
// ---------------------------------------------------------------------------

pub fn param_blocks_to_csv(beta: &ParamBlocks) -> String {
    let mut out = String::from("component");
    for c in 0..beta.p() {
        let _ = write!(out, ",coord{}", c + 1);
    }
    out.push('\n');
    for (j, block) in beta.blocks().enumerate() {
        let _ = write!(out, "{}", j + 1);
        for v in block {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

pub fn parse_param_blocks_csv(text: &str) -> Result<ParamBlocks> {
    let mut it = lines(text);
    let (hline, header) = it.next().ok_or_else(|| parse_err(1, "empty parameter file"))?;
    let fields: Vec<&str> = header.split(',').map(str::trim).collect();
    if fields.first() != Some(&"component") || fields.len() < 2 {
        return Err(parse_err(hline, "expected header component,coord1,...,coordp"));
    }
    let p = fields.len() - 1;
    for (c, field) in fields[1..].iter().enumerate() {
        if *field != format!("coord{}", c + 1) {
            return Err(parse_err(
                hline,
                format!("expected column coord{}, got {field:?}", c + 1),
            ));
        }
    }
    let mut blocks: Vec<Vec<f64>> = Vec::new();
    for (lno, line) in it {
        let row: Vec<&str> = line.split(',').collect();
        if row.len() != p + 1 {
            return Err(parse_err(lno, format!("expected {} fields, got {}", p + 1, row.len())));
        }
        let component = parse_usize(row[0], lno, "component")?;
        if component != blocks.len() + 1 {
            return Err(parse_err(
                lno,
                format!("components must ascend from 1; expected {}, got {component}", blocks.len() + 1),
            ));
        }
        let mut block = Vec::with_capacity(p);
        for (c, field) in row[1..].iter().enumerate() {
            block.push(parse_finite(field, lno, &format!("coord{}", c + 1))?);
        }
        blocks.push(block);
    }
    if blocks.is_empty() {
        return Err(parse_err(hline, "parameter file has no rows"));
    }
    ParamBlocks::from_blocks(&blocks)
}

// ---------------------------------------------------------------------------
// Grid CSV
// ---------------------------------------------------------------------------

pub const GRID_HEADER: &str = "mode,k,p,n,sigma,method,trials,median_error,finite_trials";

pub fn grid_to_csv(rows: &[GridRow]) -> String {
    let mut out = String::from(GRID_HEADER);
    out.push('\n');
    for r in rows {
        // {:e} keeps tiny medians compact and still round-trips exactly.
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{:e},{}",
            r.mode.as_str(),
            r.k,
            r.p,
            r.n,
            r.sigma,
            r.method.as_str(),
            r.trials,
            r.median_error,
            r.finite_trials
        );
    }
    out
}

pub fn parse_grid_csv(text: &str) -> Result<Vec<GridRow>> {
    let mut it = lines(text);
    let (hline, header) = it.next().ok_or_else(|| parse_err(1, "empty grid file"))?;
    if header.trim() != GRID_HEADER {
        return Err(parse_err(hline, format!("expected header {GRID_HEADER:?}")));
    }
    let mut rows = Vec::new();
    for (lno, line) in it {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 9 {
            return Err(parse_err(lno, format!("expected 9 fields, got {}", f.len())));
        }
        let mode = GridMode::parse(f[0].trim())
            .ok_or_else(|| parse_err(lno, format!("unknown mode {:?}", f[0])))?;
        let method = Method::parse(f[5].trim())
            .ok_or_else(|| parse_err(lno, format!("unknown method {:?}", f[5])))?;
        let median_error = parse_f64(f[7], lno, "median_error")?;
        if median_error.is_nan() || median_error < 0.0 {
            return Err(parse_err(lno, "median_error must be nonnegative or inf"));
        }
        let sigma = parse_finite(f[4], lno, "sigma")?;
        if sigma < 0.0 {
            return Err(parse_err(lno, "sigma must be >= 0"));
        }
        rows.push(GridRow {
            mode,
            k: parse_usize(f[1], lno, "k")?,
            p: parse_usize(f[2], lno, "p")?,
            n: parse_usize(f[3], lno, "n")?,
            sigma,
            method,
            trials: parse_usize(f[6], lno, "trials")?,
            median_error,
            finite_trials: parse_usize(f[8], lno, "finite_trials")?,
        });
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// File wrappers
// ---------------------------------------------------------------------------

pub fn read_dataset(path: &Path) -> Result<Dataset> {
    parse_dataset_csv(&std::fs::read_to_string(path)?)
}

pub fn write_dataset(path: &Path, data: &Dataset) -> Result<()> {
    Ok(std::fs::write(path, dataset_to_csv(data))?)
}

pub fn read_param_blocks(path: &Path) -> Result<ParamBlocks> {
    parse_param_blocks_csv(&std::fs::read_to_string(path)?)
}

pub fn write_param_blocks(path: &Path, beta: &ParamBlocks) -> Result<()> {
    Ok(std::fs::write(path, param_blocks_to_csv(beta))?)
}

pub fn read_grid(path: &Path) -> Result<Vec<GridRow>> {
    parse_grid_csv(&std::fs::read_to_string(path)?)
}

pub fn write_grid(path: &Path, rows: &[GridRow]) -> Result<()> {
    Ok(std::fs::write(path, grid_to_csv(rows))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::SeedStream;

    #[test]
    fn dataset_round_trip_with_and_without_noise() {
        let x = DenseMatrix::from_rows(&[vec![1.5, -2.0], vec![0.25, 1e-7]]).unwrap();
        let data = Dataset::new(x.clone(), vec![3.0, -0.5], Some(vec![0.1, -0.2])).unwrap();
        let text = dataset_to_csv(&data);
        assert!(text.starts_with("x1,x2,y,w\n"));
        let back = parse_dataset_csv(&text).unwrap();
        assert_eq!(back.row(0), data.row(0));
        assert_eq!(back.y(), data.y());
        assert_eq!(back.w(), data.w());

        let plain = Dataset::new(x, vec![3.0, -0.5], None).unwrap();
        let text = dataset_to_csv(&plain);
        assert!(text.starts_with("x1,x2,y\n"));
        let back = parse_dataset_csv(&text).unwrap();
        assert!(back.w().is_none());
    }

    #[test]
    fn param_blocks_round_trip() {
        let beta =
            ParamBlocks::from_blocks(&[vec![0.1, -0.5, 3.0], vec![1e-12, 2.0, -7.25]]).unwrap();
        let text = param_blocks_to_csv(&beta);
        assert!(text.starts_with("component,coord1,coord2,coord3\n1,"));
        let back = parse_param_blocks_csv(&text).unwrap();
        assert_eq!(back, beta);
    }

    #[test]
    fn grid_round_trip_including_sentinels() {
        let rows = vec![
            GridRow {
                mode: GridMode::FixPVaryK,
                k: 2,
                p: 10,
                n: 100,
                sigma: 0.1,
                method: Method::Ce,
                trials: 50,
                median_error: 1.25e-6,
                finite_trials: 50,
            },
            GridRow {
                mode: GridMode::FixPVaryK,
                k: 4,
                p: 10,
                n: 100,
                sigma: 0.1,
                method: Method::Lspa,
                trials: 50,
                median_error: f64::INFINITY,
                finite_trials: 3,
            },
        ];
        let text = grid_to_csv(&rows);
        assert!(text.contains(",inf,"));
        let back = parse_grid_csv(&text).unwrap();
        assert_eq!(back, rows);
    }

    #[test]
    fn bad_inputs_are_rejected_not_panicked() {
        assert!(parse_dataset_csv("").is_err());
        assert!(parse_dataset_csv("x1,y\n").is_err());
        assert!(parse_dataset_csv("x2,y\n1,2\n").is_err());
        assert!(parse_dataset_csv("x1,y\n1\n").is_err());
        assert!(parse_dataset_csv("x1,y\n1,nan\n").is_err());
        assert!(parse_dataset_csv("x1,y\n1,inf\n").is_err());
        assert!(parse_dataset_csv("y\n1\n").is_err());

        assert!(parse_param_blocks_csv("component\n").is_err());
        assert!(parse_param_blocks_csv("component,coord1\n2,0.5\n").is_err());
        assert!(parse_param_blocks_csv("component,coord1\n1,0.5\n1,0.5\n").is_err());
        assert!(parse_param_blocks_csv("component,coord2\n1,0.5\n").is_err());

        assert!(parse_grid_csv("nope\n").is_err());
        let bad = format!("{GRID_HEADER}\nfix_k_vary_p,2,3,10,0,ce,5,-1,5\n");
        assert!(parse_grid_csv(&bad).is_err());
        let bad = format!("{GRID_HEADER}\nfix_k_vary_p,2,3,10,0,ce,5,nan,5\n");
        assert!(parse_grid_csv(&bad).is_err());
    }

    #[test]
    fn parsers_never_panic_on_mangled_input() {
        let mut stream = SeedStream::new(123);
        let seeds = [
            dataset_to_csv(
                &Dataset::new(
                    DenseMatrix::from_rows(&[vec![1.0], vec![2.0]]).unwrap(),
                    vec![0.5, 1.5],
                    None,
                )
                .unwrap(),
            ),
            param_blocks_to_csv(&ParamBlocks::from_blocks(&[vec![1.0, 2.0]]).unwrap()),
            format!("{GRID_HEADER}\nfix_k_vary_p,2,3,10,0.1,ce,5,0.25,5\n"),
        ];
        for seed_text in &seeds {
            for _ in 0..400 {
                let mut bytes = seed_text.clone().into_bytes();
                let flips = 1 + (stream.next_u64() % 6) as usize;
                for _ in 0..flips {
                    let pos = (stream.next_u64() as usize) % bytes.len();
                    bytes[pos] = (stream.next_u64() & 0xFF) as u8;
                }
                if let Ok(s) = String::from_utf8(bytes) {
                    let _ = parse_dataset_csv(&s);
                    let _ = parse_param_blocks_csv(&s);
                    let _ = parse_grid_csv(&s);
                }
            }
        }
    }
}
