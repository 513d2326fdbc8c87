//! CSV persistence for coordinates, readings, graphs and JPSDs.
//!
//! Every file has a header row. Signals are stored one station per row with the
//! station id in the first column; an empty cell is a missing value (`NaN` in
//! memory). A graph is an edge list `i,j,weight` plus a node file
//! `<stem>.nodes.csv` with columns `index,id[,x,y,...]`.

use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::psd::{Interpolation, Jpsd};

fn parse_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        message: message.into(),
    }
}

fn reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    Ok(csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)?)
}

fn parse_number(path: &Path, line: usize, column: &str, cell: &str) -> Result<f64> {
    cell.parse::<f64>().map_err(|_| {
        parse_err(
            path,
            format!("line {line}, column {column}: '{cell}' is not a number"),
        )
    })
}

/// Station positions: ids and an `N × d` coordinate matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Coordinates {
    pub ids: Vec<String>,
    pub coords: DMatrix<f64>,
}

pub fn read_coordinates(path: &Path) -> Result<Coordinates> {
    let mut rdr = reader(path)?;
    let header = rdr.headers()?.clone();
    let cols: Vec<&str> = header.iter().collect();
    if cols.len() < 3 || cols.len() > 4 || cols[0] != "id" || cols[1] != "x" || cols[2] != "y" {
        return Err(parse_err(path, "header must be id,x,y[,z]"));
    }
    if cols.len() == 4 && cols[3] != "z" {
        return Err(parse_err(path, "header must be id,x,y[,z]"));
    }
    let dim = cols.len() - 1;
    let mut ids = Vec::new();
    let mut values = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = row + 2;
        ids.push(rec[0].to_string());
        for (c, name) in cols.iter().enumerate().skip(1) {
            values.push(parse_number(path, line, name, &rec[c])?);
        }
    }
    check_unique(path, &ids)?;
    let coords = DMatrix::from_row_slice(ids.len(), dim, &values);
    Ok(Coordinates { ids, coords })
}

pub fn write_coordinates(path: &Path, c: &Coordinates) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["id".to_string(), "x".into(), "y".into()];
    if c.coords.ncols() == 3 {
        header.push("z".into());
    }
    w.write_record(&header)?;
    for (i, id) in c.ids.iter().enumerate() {
        let mut rec = vec![id.clone()];
        rec.extend(c.coords.row(i).iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

fn check_unique(path: &Path, ids: &[String]) -> Result<()> {
    let mut seen = std::collections::HashSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(parse_err(path, format!("duplicate station id '{id}'")));
        }
    }
    Ok(())
}

/// A table of readings: station ids, time labels and an `N × T` matrix with `NaN`
/// for missing cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Readings {
    pub ids: Vec<String>,
    pub times: Vec<String>,
    pub values: DMatrix<f64>,
}

impl Readings {
    /// Readings labelled `0..T` for the given ids.
    pub fn new(ids: Vec<String>, values: DMatrix<f64>) -> Result<Self> {
        if ids.len() != values.nrows() {
            return Err(Error::dims(values.nrows(), ids.len()));
        }
        let times = (0..values.ncols()).map(|t| t.to_string()).collect();
        Ok(Readings { ids, times, values })
    }

    pub fn missing_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_nan()).count()
    }
}

pub fn read_readings(path: &Path) -> Result<Readings> {
    let mut rdr = reader(path)?;
    let header = rdr.headers()?.clone();
    if header.len() < 2 || &header[0] != "id" {
        return Err(parse_err(path, "header must be id,<time labels...>"));
    }
    let times: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let mut ids = Vec::new();
    let mut values = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = row + 2;
        if rec.len() != header.len() {
            return Err(parse_err(
                path,
                format!("line {line}: expected {} cells, found {}", header.len(), rec.len()),
            ));
        }
        ids.push(rec[0].to_string());
        for (c, cell) in rec.iter().enumerate().skip(1) {
            let v = if cell.is_empty() || cell.eq_ignore_ascii_case("nan") {
                f64::NAN
            } else {
                let v = parse_number(path, line, &times[c - 1], cell)?;
                if v.is_infinite() {
                    return Err(parse_err(path, format!("line {line}: infinite value")));
                }
                v
            };
            values.push(v);
        }
    }
    if ids.is_empty() {
        return Err(parse_err(path, "no stations"));
    }
    check_unique(path, &ids)?;
    let values = DMatrix::from_row_slice(ids.len(), times.len(), &values);
    Ok(Readings { ids, times, values })
}

pub fn write_readings(path: &Path, r: &Readings) -> Result<()> {
    if r.ids.len() != r.values.nrows() || r.times.len() != r.values.ncols() {
        return Err(Error::dims(
            format!("{}x{}", r.ids.len(), r.times.len()),
            format!("{}x{}", r.values.nrows(), r.values.ncols()),
        ));
    }
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["id".to_string()];
    header.extend(r.times.iter().cloned());
    w.write_record(&header)?;
    for (i, id) in r.ids.iter().enumerate() {
        let mut rec = vec![id.clone()];
        rec.extend(r.values.row(i).iter().map(|v| {
            if v.is_nan() {
                String::new()
            } else {
                v.to_string()
            }
        }));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Node file that accompanies an edge list: `graph.csv` → `graph.nodes.csv`.
pub fn node_file_path(edge_path: &Path) -> PathBuf {
    let stem = edge_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "graph".into());
    edge_path.with_file_name(format!("{stem}.nodes.csv"))
}

/// Graph together with the station ids of its vertices.
#[derive(Debug, Clone)]
pub struct StoredGraph {
    pub graph: Graph,
    pub ids: Vec<String>,
}

pub fn write_graph(edge_path: &Path, g: &Graph, ids: &[String]) -> Result<()> {
    if ids.len() != g.n_vertices() {
        return Err(Error::dims(g.n_vertices(), ids.len()));
    }
    let mut w = csv::Writer::from_path(edge_path)?;
    w.write_record(["i", "j", "weight"])?;
    for (i, j, v) in g.edges() {
        w.write_record([i.to_string(), j.to_string(), v.to_string()])?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(node_file_path(edge_path))?;
    let dim = g.coords().map_or(0, |c| c.ncols());
    let mut header = vec!["index".to_string(), "id".to_string()];
    header.extend(["x", "y", "z"].iter().take(dim).map(|s| s.to_string()));
    w.write_record(&header)?;
    for (i, id) in ids.iter().enumerate() {
        let mut rec = vec![i.to_string(), id.clone()];
        if let Some(c) = g.coords() {
            rec.extend(c.row(i).iter().map(|v| v.to_string()));
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_graph(edge_path: &Path) -> Result<StoredGraph> {
    let node_path = node_file_path(edge_path);
    let mut rdr = reader(&node_path)?;
    let header = rdr.headers()?.clone();
    if header.len() < 2 || &header[0] != "index" || &header[1] != "id" {
        return Err(parse_err(&node_path, "header must be index,id[,x,y[,z]]"));
    }
    let dim = header.len() - 2;
    let mut ids = Vec::new();
    let mut coords = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = row + 2;
        let idx = rec[0]
            .parse::<usize>()
            .map_err(|_| parse_err(&node_path, format!("line {line}: bad index '{}'", &rec[0])))?;
        if idx != row {
            return Err(parse_err(
                &node_path,
                format!("line {line}: indices must be 0..N in order"),
            ));
        }
        ids.push(rec[1].to_string());
        for c in 2..header.len() {
            coords.push(parse_number(&node_path, line, &header[c], &rec[c])?);
        }
    }
    let n = ids.len();
    if n == 0 {
        return Err(parse_err(&node_path, "no vertices"));
    }

    let mut edges = Vec::new();
    let mut rdr = reader(edge_path)?;
    let header = rdr.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != ["i", "j", "weight"] {
        return Err(parse_err(edge_path, "header must be i,j,weight"));
    }
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = row + 2;
        let index = |c: usize| {
            rec[c]
                .parse::<usize>()
                .map_err(|_| parse_err(edge_path, format!("line {line}: bad vertex '{}'", &rec[c])))
        };
        let (i, j) = (index(0)?, index(1)?);
        if i >= n || j >= n {
            return Err(parse_err(
                edge_path,
                format!("line {line}: vertex out of range for {n} nodes"),
            ));
        }
        edges.push((i, j, parse_number(edge_path, line, "weight", &rec[2])?));
    }
    let mut graph = Graph::from_edges(n, &edges)?;
    if dim > 0 {
        graph = graph.with_coords(DMatrix::from_row_slice(n, dim, &coords))?;
    }
    Ok(StoredGraph { graph, ids })
}

/// Writes a JPSD: header `lambda,<ω_0>,...`, one row per graph eigenvalue.
pub fn write_jpsd(path: &Path, jpsd: &Jpsd) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["lambda".to_string()];
    header.extend(jpsd.band_frequencies().iter().map(|v| v.to_string()));
    w.write_record(&header)?;
    for (n, lambda) in jpsd.eigenvalues().iter().enumerate() {
        let mut rec = vec![lambda.to_string()];
        rec.extend(jpsd.values().row(n).iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_jpsd(path: &Path) -> Result<Jpsd> {
    let mut rdr = reader(path)?;
    let header = rdr.headers()?.clone();
    if header.len() < 2 || &header[0] != "lambda" {
        return Err(parse_err(path, "header must be lambda,<band frequencies...>"));
    }
    let m = header.len() - 1;
    let mut lambdas = Vec::new();
    let mut values = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = row + 2;
        lambdas.push(parse_number(path, line, "lambda", &rec[0])?);
        for c in 1..header.len() {
            values.push(parse_number(path, line, &header[c], &rec[c])?);
        }
    }
    if lambdas.is_empty() {
        return Err(parse_err(path, "no rows"));
    }
    Jpsd::new(
        DMatrix::from_row_slice(lambdas.len(), m, &values),
        DVector::from_vec(lambdas),
        Interpolation::default(),
    )
    .map_err(|e| parse_err(path, e.to_string()))
}

/// Plain numeric matrix with a header row of column indices.
pub fn write_matrix(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record((0..m.ncols()).map(|c| c.to_string()))?;
    for row in m.row_iter() {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>> {
    let mut rdr = reader(path)?;
    let cols = rdr.headers()?.len();
    let mut values = Vec::new();
    let mut rows = 0;
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        for (c, cell) in rec.iter().enumerate() {
            values.push(parse_number(path, row + 2, &c.to_string(), cell)?);
        }
        rows += 1;
    }
    Ok(DMatrix::from_row_slice(rows, cols, &values))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn readings_round_trip_with_missing() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.csv");
        let mut v = DMatrix::from_row_slice(2, 3, &[1.0, 2.5, -3.0, 0.1, 0.2, 0.3]);
        v[(1, 1)] = f64::NAN;
        let r = Readings::new(vec!["a".into(), "b".into()], v).unwrap();
        write_readings(&p, &r).unwrap();
        let back = read_readings(&p).unwrap();
        assert_eq!(back.ids, r.ids);
        assert_eq!(back.missing_count(), 1);
        assert!(back.values[(1, 1)].is_nan());
        assert_eq!(back.values[(0, 2)], -3.0);
    }

    #[test]
    fn non_numeric_cell_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.csv");
        std::fs::write(&p, "id,0,1\na,1,x\n").unwrap();
        let err = read_readings(&p).unwrap_err();
        assert!(err.to_string().contains("'x'"), "{err}");
    }

    #[test]
    fn graph_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("g.csv");
        let coords = DMatrix::from_row_slice(3, 2, &[0.0, 0.0, 1.0, 0.0, 2.0, 0.0]);
        let g = crate::graph::build_gaussian_radius_graph(&coords, 1.5, 1.0).unwrap();
        let ids = vec!["s0".to_string(), "s1".into(), "s2".into()];
        write_graph(&p, &g, &ids).unwrap();
        assert!(dir.path().join("g.nodes.csv").exists());
        let back = read_graph(&p).unwrap();
        assert_eq!(back.ids, ids);
        assert_eq!(back.graph.weights(), g.weights());
        assert_eq!(back.graph.coords(), g.coords());
    }

    #[test]
    fn jpsd_and_coords_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("j.csv");
        let j = Jpsd::new(
            DMatrix::from_row_slice(2, 4, &[1.0, 0.5, 0.25, 0.5, 2.0, 1.0, 0.1, 1.0]),
            DVector::from_vec(vec![0.0, 1.5]),
            Interpolation::default(),
        )
        .unwrap();
        write_jpsd(&p, &j).unwrap();
        assert_eq!(read_jpsd(&p).unwrap(), j);

        let p = dir.path().join("c.csv");
        let c = Coordinates {
            ids: vec!["a".into(), "b".into()],
            coords: DMatrix::from_row_slice(2, 2, &[0.5, 1.0, -2.0, 3.25]),
        };
        write_coordinates(&p, &c).unwrap();
        assert_eq!(read_coordinates(&p).unwrap(), c);
    }

    #[test]
    fn negative_jpsd_file_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("j.csv");
        std::fs::write(&p, "lambda,0\n0,-1\n").unwrap();
        assert!(matches!(read_jpsd(&p), Err(Error::Parse { .. })));
    }
}
