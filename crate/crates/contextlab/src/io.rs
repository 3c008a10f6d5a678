//! Report formatting and file I/O: 12-significant-digit numeric rounding,
//! exact-rational strings, JSON data-transfer shapes for operators, POVMs and
//! hypergraphs, CSV readers/writers, and atomic output files.

use std::io::Write as _;
use std::path::Path;

use contextlab_core::linalg::{C64, CMatrix};
use contextlab_core::polytope::{rat_to_f64, Rat, VertexSet};
use contextlab_core::quantum::{Effect, HermitianOperator, Povm};
use contextlab_core::Error;
use serde::{Deserialize, Serialize};

/// Round a double to 12 significant digits. All floating-point values in
/// reports pass through this, so reruns are byte-identical and insignificant
/// trailing digits never leak into artifacts.
pub fn sig12(x: f64) -> f64 {
    if !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse::<f64>().expect("formatted float reparses")
}

/// Canonical string form of a rounded double (shortest representation that
/// round-trips to the 12-significant-digit value).
pub fn f64_str(x: f64) -> String {
    format!("{}", sig12(x))
}

/// Exact-rational string: `"p/q"` in lowest terms, with the `/q` omitted for
/// integers (`"1"`, `"0"`, `"5/6"`, `"-3/2"`).
pub fn rat_str(r: &Rat) -> String {
    format!("{r}")
}

/// JSON number from a rounded double (`null` if not finite, which no report
/// should produce).
pub fn jnum(x: f64) -> serde_json::Value {
    serde_json::Number::from_f64(sig12(x)).map_or(serde_json::Value::Null, serde_json::Value::Number)
}

/// JSON list of rounded doubles.
pub fn jnum_list(xs: &[f64]) -> serde_json::Value {
    serde_json::Value::Array(xs.iter().map(|&x| jnum(x)).collect())
}

/// Serialize a JSON value as the final artifact text (pretty-printed, sorted
/// keys, trailing newline).
pub fn json_artifact(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

/// The machine-readable error artifact `{"error": {"kind", "message"}}`.
pub fn error_json(e: &Error) -> String {
    json_artifact(&serde_json::json!({
        "error": { "kind": error_kind(e), "message": e.to_string() }
    }))
}

/// Stable kind tag of a core error (the variant name).
pub fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::DimensionMismatch { .. } => "DimensionMismatch",
        Error::NumericalRangeError { .. } => "NumericalRangeError",
        Error::InvalidBloch => "InvalidBloch",
        Error::ShapeMismatch(_) => "ShapeMismatch",
        Error::ResourceLimit(_) => "ResourceLimit",
        Error::EtaMismatch { .. } => "EtaMismatch",
        Error::InvalidJointParams(_) => "InvalidJointParams",
        Error::NotProjective => "NotProjective",
        Error::DimensionLimit { .. } => "DimensionLimit",
        Error::EmptyPolytope => "EmptyPolytope",
        Error::NoDisturbanceViolated(_) => "NoDisturbanceViolated",
        Error::IncompatiblePair { .. } => "IncompatiblePair",
        Error::EquivalenceCheckFailed(_) => "EquivalenceCheckFailed",
        Error::ClassificationFailure(_) => "ClassificationFailure",
        Error::NotNormalized { .. } => "NotNormalized",
        Error::DegenerateFit(_) => "DegenerateFit",
        Error::InfeasibleLp(_) => "InfeasibleLp",
        Error::InvalidInput(_) => "InvalidInput",
    }
}

// ---------------------------------------------------------------------------
// JSON data-transfer shapes
// ---------------------------------------------------------------------------

/// A complex matrix as `{dim, re, im}` with row-major entry lists.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixDto {
    pub dim: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl MatrixDto {
    pub fn from_matrix(m: &CMatrix) -> Self {
        let d = m.dim();
        let mut re = Vec::with_capacity(d * d);
        let mut im = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                let z = m.get(i, j);
                re.push(sig12(z.re));
                im.push(sig12(z.im));
            }
        }
        MatrixDto { dim: d, re, im }
    }

    pub fn to_matrix(&self) -> Result<CMatrix, Error> {
        let d = self.dim;
        if self.re.len() != d * d || self.im.len() != d * d {
            return Err(Error::ShapeMismatch(format!(
                "matrix of dim {d} needs {} entries, got re: {}, im: {}",
                d * d,
                self.re.len(),
                self.im.len()
            )));
        }
        Ok(CMatrix::from_fn(d, |i, j| {
            C64::new(self.re[i * d + j], self.im[i * d + j])
        }))
    }
}

/// A POVM as `{labels, effects}` with one matrix per effect.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PovmDto {
    pub labels: Vec<String>,
    pub effects: Vec<MatrixDto>,
}

impl PovmDto {
    pub fn from_povm(p: &Povm) -> Self {
        PovmDto {
            labels: p.labels().to_vec(),
            effects: p.effects().iter().map(|e| MatrixDto::from_matrix(e.matrix())).collect(),
        }
    }

    pub fn to_povm(&self) -> Result<Povm, Error> {
        let effects = self
            .effects
            .iter()
            .map(|m| Effect::new(HermitianOperator::new(m.to_matrix()?)?))
            .collect::<Result<Vec<_>, Error>>()?;
        Povm::new(effects, self.labels.clone())
    }
}

/// A joint-measurability hypergraph as `{n_vertices, edges}`; the downward
/// closure is applied when the core type is constructed from it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JmHypergraphDto {
    pub n_vertices: usize,
    pub edges: Vec<Vec<usize>>,
}

/// An event hypergraph as `{n_classes, measurements}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EventHypergraphDto {
    pub n_classes: usize,
    pub measurements: Vec<Vec<usize>>,
}

/// Exact plus double views of a vertex set, for JSON reports.
pub fn vertex_set_json(vs: &VertexSet) -> serde_json::Value {
    let exact: Vec<Vec<String>> =
        vs.iter().map(|v| v.iter().map(rat_str).collect()).collect();
    let approx: Vec<serde_json::Value> = vs
        .iter()
        .map(|v| jnum_list(&v.iter().map(rat_to_f64).collect::<Vec<_>>()))
        .collect();
    serde_json::json!({
        "count": vs.len(),
        "vertices": exact,
        "vertices_f64": approx,
    })
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

/// A CSV artifact built row by row; all rows must have the header's width.
pub struct CsvBuilder {
    writer: csv::Writer<Vec<u8>>,
}

impl CsvBuilder {
    pub fn new(header: &[&str]) -> Self {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(header).expect("in-memory CSV write");
        CsvBuilder { writer }
    }

    pub fn row(&mut self, cells: &[String]) {
        self.writer.write_record(cells).expect("in-memory CSV write");
    }

    pub fn finish(self) -> String {
        let bytes = self.writer.into_inner().expect("in-memory CSV flush");
        String::from_utf8(bytes).expect("CSV is UTF-8")
    }
}

/// Vertex-set CSV: header `v0..v{d-1}`, one row per vertex, exact `"p/q"`
/// cells.
pub fn vertex_set_csv(vs: &VertexSet) -> String {
    let dim = vs.iter().next().map_or(0, Vec::len);
    let names: Vec<String> = (0..dim).map(|i| format!("v{i}")).collect();
    let header: Vec<&str> = names.iter().map(String::as_str).collect();
    let mut csv = CsvBuilder::new(&header);
    for v in vs.iter() {
        csv.row(&v.iter().map(rat_str).collect::<Vec<_>>());
    }
    csv.finish()
}

/// Raw-data CSV: a header row of preparation labels, then one row per
/// measurement of `"f;df"` cells.
pub fn raw_data_csv(f: &[Vec<f64>], df: &[Vec<f64>], prep_labels: &[String]) -> String {
    let header: Vec<&str> = prep_labels.iter().map(String::as_str).collect();
    let mut csv = CsvBuilder::new(&header);
    for (frow, dfrow) in f.iter().zip(df.iter()) {
        let cells: Vec<String> = frow
            .iter()
            .zip(dfrow.iter())
            .map(|(&x, &dx)| format!("{};{}", f64_str(x), f64_str(dx)))
            .collect();
        csv.row(&cells);
    }
    csv.finish()
}

/// Parse a raw-data CSV produced by [`raw_data_csv`] (or hand-written in the
/// same shape) into frequency and uncertainty matrices plus the preparation
/// labels.
pub fn parse_raw_data_csv(text: &str) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<String>), String> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(text.as_bytes());
    let mut rows = reader.records();
    let header = match rows.next() {
        Some(Ok(rec)) => rec,
        Some(Err(e)) => return Err(format!("malformed CSV header: {e}")),
        None => return Err("empty raw-data CSV".to_string()),
    };
    let labels: Vec<String> = header.iter().map(str::to_string).collect();
    let n = labels.len();
    let mut f = Vec::new();
    let mut df = Vec::new();
    for (line, rec) in rows.enumerate() {
        let rec = rec.map_err(|e| format!("malformed CSV row {}: {e}", line + 2))?;
        if rec.len() != n {
            return Err(format!(
                "row {} has {} cells, header has {n}",
                line + 2,
                rec.len()
            ));
        }
        let mut frow = Vec::with_capacity(n);
        let mut dfrow = Vec::with_capacity(n);
        for (col, cell) in rec.iter().enumerate() {
            let (fs, dfs) = cell.split_once(';').ok_or_else(|| {
                format!("cell ({}, {}) is not an \"f;df\" pair: {cell:?}", line + 2, col + 1)
            })?;
            let fv: f64 = fs
                .trim()
                .parse()
                .map_err(|e| format!("cell ({}, {}): bad frequency {fs:?}: {e}", line + 2, col + 1))?;
            let dfv: f64 = dfs
                .trim()
                .parse()
                .map_err(|e| format!("cell ({}, {}): bad uncertainty {dfs:?}: {e}", line + 2, col + 1))?;
            frow.push(fv);
            dfrow.push(dfv);
        }
        f.push(frow);
        df.push(dfrow);
    }
    if f.is_empty() {
        return Err("raw-data CSV has no measurement rows".to_string());
    }
    Ok((f, df, labels))
}

/// The preparation labels of the standard 4-axis two-outcome layout:
/// `P1+, P1-, .., P4+, P4-`.
pub fn fcf_prep_labels() -> Vec<String> {
    (1..=4).flat_map(|i| [format!("P{i}+"), format!("P{i}-")]).collect()
}

// ---------------------------------------------------------------------------
// Output sink
// ---------------------------------------------------------------------------

/// Write an artifact atomically: the bytes land in a temporary file in the
/// destination directory and are renamed over the target, so a crashed run
/// never leaves a partial artifact.
pub fn atomic_write(path: &Path, text: &str) -> Result<(), String> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => std::path::PathBuf::from("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(&dir)
        .map_err(|e| format!("cannot create temporary file in {}: {e}", dir.display()))?;
    tmp.write_all(text.as_bytes())
        .map_err(|e| format!("cannot write temporary file: {e}"))?;
    tmp.persist(path)
        .map_err(|e| format!("cannot move artifact into place at {}: {e}", path.display()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use contextlab_core::polytope::rat;
    use contextlab_core::quantum::pauli;

    #[test]
    fn sig12_rounds_to_twelve_significant_digits() {
        assert_eq!(sig12(1.0 / 3.0), 0.333333333333);
        assert_eq!(sig12(2.0f64.sqrt()), 1.41421356237);
        assert_eq!(sig12(0.0), 0.0);
        assert_eq!(sig12(-123456.789012345), -123456.789012);
        assert_eq!(f64_str(1.0 / 3.0), "0.333333333333");
        // Idempotent.
        assert_eq!(sig12(sig12(0.1793)), sig12(0.1793));
    }

    #[test]
    fn rational_strings() {
        assert_eq!(rat_str(&rat(5, 6)), "5/6");
        assert_eq!(rat_str(&rat(2, 4)), "1/2");
        assert_eq!(rat_str(&rat(3, 1)), "3");
        assert_eq!(rat_str(&rat(-1, 2)), "-1/2");
        assert_eq!(rat_str(&rat(0, 7)), "0");
    }

    #[test]
    fn matrix_dto_round_trip() {
        let [sx, sy, _] = pauli();
        let m = sx.add(&sy.scale_re(0.25));
        let dto = MatrixDto::from_matrix(&m);
        let back = dto.to_matrix().unwrap();
        assert!(m.max_abs_diff(&back) < 1e-11);
        assert_eq!(dto.re.len(), 4);
    }

    #[test]
    fn raw_data_csv_round_trip() {
        let f = vec![vec![0.125, 0.5], vec![0.75, 1.0 / 3.0]];
        let df = vec![vec![0.001, 0.002], vec![0.003, 0.004]];
        let labels = vec!["Pa".to_string(), "Pb".to_string()];
        let text = raw_data_csv(&f, &df, &labels);
        let (f2, df2, labels2) = parse_raw_data_csv(&text).unwrap();
        assert_eq!(labels2, labels);
        for i in 0..2 {
            for j in 0..2 {
                assert!((f2[i][j] - sig12(f[i][j])).abs() < 1e-15);
                assert!((df2[i][j] - sig12(df[i][j])).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn raw_data_csv_rejects_malformed_cells() {
        assert!(parse_raw_data_csv("").is_err());
        assert!(parse_raw_data_csv("a,b\n0.5,0.5\n").is_err(), "missing ;df");
        assert!(parse_raw_data_csv("a,b\n0.5;0.1\n").is_err(), "row width");
        assert!(parse_raw_data_csv("a\nx;0.1\n").is_err(), "non-numeric");
    }

    #[test]
    fn atomic_write_replaces_content() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.json");
        atomic_write(&path, "first\n").unwrap();
        atomic_write(&path, "second\n").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "second\n");
    }

    #[test]
    fn error_json_shape() {
        let text = error_json(&Error::EmptyPolytope);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["error"]["kind"], "EmptyPolytope");
        assert!(v["error"]["message"].as_str().unwrap().contains("empty"));
    }
}
