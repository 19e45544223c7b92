//! JSON instance and result files, plus the seeded instance generator.
//!
//! Matrices are arrays of row arrays. Floats are written in shortest
//! round-trip form, so save followed by load reproduces every bit.

use std::fs;
use std::path::Path;

use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::diagnostics::SolveReport;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::model::{
    closed_loop_op_continuous, closed_loop_op_discrete, validate_scare, validate_sdare, Instance,
    ProblemData, ScareInstance, SdareInstance,
};

pub type Rows = Vec<Vec<f64>>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InstanceKind {
    Sdare,
    Scare,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub kind: InstanceKind,
    pub r: usize,
    pub n: usize,
    pub m: usize,
    #[serde(rename = "A")]
    pub a: Vec<Rows>,
    #[serde(rename = "B")]
    pub b: Vec<Rows>,
    #[serde(rename = "Q")]
    pub q: Rows,
    #[serde(rename = "L")]
    pub l: Rows,
    #[serde(rename = "R")]
    pub r_weight: Rows,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<Metadata>,
}

fn to_matrix(field: &str, rows: &Rows, shape: (usize, usize)) -> Result<Matrix> {
    if rows.len() != shape.0 {
        return Err(Error::parse(field, format!("expected {} rows, found {}", shape.0, rows.len())));
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != shape.1 {
            return Err(Error::parse(
                format!("{field}[{i}]"),
                format!("expected {} columns, found {}", shape.1, row.len()),
            ));
        }
    }
    let data = rows.iter().flatten().copied().collect();
    Matrix::new(shape.0, shape.1, data).map_err(|e| Error::parse(field, e.to_string()))
}

fn term_list(field: &str, list: &[Rows], r: usize, shape: (usize, usize)) -> Result<Vec<Matrix>> {
    if list.len() != r {
        return Err(Error::parse(field, format!("expected {r} matrices, found {}", list.len())));
    }
    list.iter()
        .enumerate()
        .map(|(i, rows)| to_matrix(&format!("{field}[{i}]"), rows, shape))
        .collect()
}

impl InstanceFile {
    pub fn from_instance(inst: &Instance, metadata: Option<Metadata>) -> Self {
        let d = inst.data();
        Self {
            kind: match inst {
                Instance::Sdare(_) => InstanceKind::Sdare,
                Instance::Scare(_) => InstanceKind::Scare,
            },
            r: d.terms(),
            n: d.n(),
            m: d.m(),
            a: d.a.iter().map(Matrix::to_rows).collect(),
            b: d.b.iter().map(Matrix::to_rows).collect(),
            q: d.q.to_rows(),
            l: d.l.to_rows(),
            r_weight: d.r.to_rows(),
            metadata,
        }
    }

    /// Converts to a typed instance; structural errors name the field.
    pub fn to_instance(&self) -> Result<Instance> {
        let (r, n, m) = (self.r, self.n, self.m);
        if r == 0 {
            return Err(Error::parse("r", "must be at least 1"));
        }
        if n == 0 {
            return Err(Error::parse("n", "must be at least 1"));
        }
        let data = ProblemData {
            a: term_list("A", &self.a, r, (n, n))?,
            b: term_list("B", &self.b, r, (n, m))?,
            q: to_matrix("Q", &self.q, (n, n))?,
            l: to_matrix("L", &self.l, (n, m))?,
            r: to_matrix("R", &self.r_weight, (m, m))?,
        };
        Ok(match self.kind {
            InstanceKind::Sdare => Instance::Sdare(SdareInstance::new(data)?),
            InstanceKind::Scare => Instance::Scare(ScareInstance::new(data)?),
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("instance serializes");
        s.push('\n');
        s
    }
}

/// Parses instance JSON text without validating assumptions.
pub fn parse_instance(text: &str) -> Result<InstanceFile> {
    serde_json::from_str(text).map_err(|e| {
        Error::parse(format!("line {}, column {}", e.line(), e.column()), e.to_string())
    })
}

/// Tolerance used when validating loaded instances.
pub const LOAD_VALIDATION_TOL: f64 = 1e-10;

/// Reads, parses and validates an instance. Weight violations are errors;
/// inconclusive stabilizability or detectability is only logged.
pub fn load_instance(path: &Path) -> Result<Instance> {
    let text = fs::read_to_string(path)?;
    load_instance_str(&text)
}

pub fn load_instance_str(text: &str) -> Result<Instance> {
    let inst = parse_instance(text)?.to_instance()?;
    let report = match &inst {
        Instance::Sdare(i) => validate_sdare(i, LOAD_VALIDATION_TOL),
        Instance::Scare(i) => validate_scare(i, LOAD_VALIDATION_TOL),
    };
    if !report.weights_ok() {
        return Err(Error::Validation(report.failures().join("; ")));
    }
    for f in report.failures() {
        warn!("{f}");
    }
    Ok(inst)
}

/// Writes `contents` to a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| Error::Io(std::io::Error::other(format!("not a file path: {}", path.display()))))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })?;
    Ok(())
}

pub fn save_instance(path: &Path, file: &InstanceFile) -> Result<()> {
    write_atomic(path, file.to_json().as_bytes())
}

/// Lowercase hex SHA-256.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultFile {
    pub kind: InstanceKind,
    pub converged: bool,
    #[serde(rename = "X")]
    pub x: Rows,
    /// Absent when the feedback could not be formed.
    #[serde(rename = "F")]
    pub f: Option<Rows>,
    pub report: SolveReport,
    pub tool_version: String,
    pub input_hash: String,
}

impl ResultFile {
    pub fn new(
        kind: InstanceKind,
        converged: bool,
        x: &Matrix,
        f: Option<&Matrix>,
        report: SolveReport,
        input: &[u8],
    ) -> Self {
        Self {
            kind,
            converged,
            x: x.symmetric_part().to_rows(),
            f: f.map(Matrix::to_rows),
            report,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            input_hash: sha256_hex(input),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut s = serde_json::to_string_pretty(self).expect("result serializes");
        s.push('\n');
        write_atomic(path, s.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| {
            Error::parse(format!("line {}, column {}", e.line(), e.column()), e.to_string())
        })
    }
}

/// Target for `ρ(Σ Aᵢ⊗Aᵢ)` in generated discrete instances.
pub const GEN_DISCRETE_RHO: f64 = 0.9;
/// Target spectral abscissa of `ℒ_0` in generated continuous instances.
pub const GEN_CONTINUOUS_ABSCISSA: f64 = -0.5;

fn uniform(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

/// Seeded well-posed instance.
///
/// Discrete: `A_i`, `B_i` uniform on `(−1, 1)`, with all `A_i` scaled by a
/// common factor when needed so `ρ(Σ Aᵢ⊗Aᵢ) ≤ 0.9`. Continuous: `A_0` is
/// shifted by a multiple of `I` so the spectral abscissa of `ℒ_0` is `−0.5`.
/// Both: `C` square with `σ_min(C) ≥ 0.1`, `L = 0.1·U`, `R = I + MᵀM`,
/// `Q = CᵀC + LR⁻¹Lᵀ`.
pub fn gen_instance(kind: InstanceKind, n: usize, m: usize, r: usize, seed: u64) -> Result<InstanceFile> {
    if n == 0 || m == 0 || r == 0 {
        return Err(Error::Validation(format!(
            "dimensions must be positive (n = {n}, m = {m}, r = {r})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a: Vec<Matrix> = (0..r).map(|_| uniform(&mut rng, n, n)).collect();
    let b: Vec<Matrix> = (0..r).map(|_| uniform(&mut rng, n, m)).collect();
    let c = loop {
        let c = uniform(&mut rng, n, n);
        if c.singular_values().last().is_some_and(|&s| s >= 0.1) {
            break c;
        }
    };
    let mm = uniform(&mut rng, m, m);
    let r_weight = (&Matrix::identity(m) + &mm.transpose().matmul(&mm)).symmetric_part();
    let l = uniform(&mut rng, n, m).scale(0.1);
    let q = (&c.transpose().matmul(&c) + &l.matmul(&r_weight.inverse()?).matmul(&l.transpose()))
        .symmetric_part();
    let zero_f = Matrix::zeros(m, n);
    let probe = |a: &[Matrix]| ProblemData {
        a: a.to_vec(),
        b: b.clone(),
        q: q.clone(),
        l: l.clone(),
        r: r_weight.clone(),
    };
    match kind {
        InstanceKind::Sdare => {
            let rho = closed_loop_op_discrete(&SdareInstance::new(probe(&a))?, &zero_f)?.spectral_radius();
            if rho > GEN_DISCRETE_RHO {
                let s = (GEN_DISCRETE_RHO * (1.0 - 1e-9) / rho).sqrt();
                a = a.iter().map(|ai| ai.scale(s)).collect();
            }
        }
        InstanceKind::Scare => {
            let alpha =
                closed_loop_op_continuous(&ScareInstance::new(probe(&a))?, &zero_f)?.spectral_abscissa();
            // Shifting A_0 by −s moves every eigenvalue of ℒ_0 by −2s.
            let s = (alpha - GEN_CONTINUOUS_ABSCISSA) / 2.0;
            a[0] = &a[0] - &Matrix::identity(n).scale(s);
        }
    }
    let data = probe(&a);
    let inst = match kind {
        InstanceKind::Sdare => Instance::Sdare(SdareInstance::new(data)?),
        InstanceKind::Scare => Instance::Scare(ScareInstance::new(data)?),
    };
    let tag = match kind {
        InstanceKind::Sdare => "sdare",
        InstanceKind::Scare => "scare",
    };
    Ok(InstanceFile::from_instance(
        &inst,
        Some(Metadata {
            seed: Some(seed),
            description: Some(format!("generated {tag} instance n={n} m={m} r={r}")),
        }),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    const SCALAR: &str = r#"{
        "kind": "sdare", "r": 1, "n": 1, "m": 1,
        "A": [[[1.0]]], "B": [[[1.0]]],
        "Q": [[1.0]], "L": [[0.0]], "R": [[1.0]]
    }"#;

    #[test]
    fn minimal_scalar_file() {
        match load_instance_str(SCALAR).unwrap() {
            Instance::Sdare(i) => {
                assert_eq!(i.a, vec![Matrix::scalar(1.0)]);
                assert_eq!(i.b, vec![Matrix::scalar(1.0)]);
                assert_eq!(i.q, Matrix::scalar(1.0));
                assert_eq!(i.l, Matrix::scalar(0.0));
                assert_eq!(i.r, Matrix::scalar(1.0));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn parse_errors_name_the_field() {
        let text = SCALAR.replace("\"r\": 1", "\"r\": 2").replace("\"B\": [[[1.0]]]", "\"B\": [[[1.0]], [[0.0]]]");
        match load_instance_str(&text) {
            Err(Error::Parse { field, .. }) => assert_eq!(field, "A"),
            other => panic!("{other:?}"),
        }
        let text = SCALAR.replace("\"Q\": [[1.0]]", "\"Q\": [[1.0, 2.0]]");
        match load_instance_str(&text) {
            Err(Error::Parse { field, .. }) => assert_eq!(field, "Q[0]"),
            other => panic!("{other:?}"),
        }
        match load_instance_str("{\"kind\": \"sdare\",") {
            Err(Error::Parse { field, .. }) => assert!(field.starts_with("line 1")),
            other => panic!("{other:?}"),
        }
        let text = SCALAR.replace("\"R\": [[1.0]]", "\"R\": [[-1.0]]");
        assert!(matches!(load_instance_str(&text), Err(Error::Validation(_))));
    }

    #[test]
    fn round_trip_is_bit_identical() {
        let file = gen_instance(InstanceKind::Scare, 3, 2, 2, 11).unwrap();
        let text = file.to_json();
        let back = parse_instance(&text).unwrap();
        assert_eq!(back, file);
        assert_eq!(back.to_json(), text);
        let odd = InstanceFile {
            q: vec![vec![0.1 + 0.2]],
            ..parse_instance(SCALAR).unwrap()
        };
        let back = parse_instance(&odd.to_json()).unwrap();
        assert_eq!(back.q[0][0].to_bits(), (0.1f64 + 0.2).to_bits());
    }

    #[test]
    fn generator_is_deterministic_and_well_posed() {
        let a = gen_instance(InstanceKind::Sdare, 3, 2, 3, 5).unwrap().to_json();
        let b = gen_instance(InstanceKind::Sdare, 3, 2, 3, 5).unwrap().to_json();
        assert_eq!(a, b);
        assert_ne!(a, gen_instance(InstanceKind::Sdare, 3, 2, 3, 6).unwrap().to_json());

        let Instance::Sdare(inst) = gen_instance(InstanceKind::Sdare, 3, 2, 3, 5).unwrap().to_instance().unwrap()
        else {
            panic!()
        };
        let rep = validate_sdare(&inst, 1e-10);
        assert!(rep.passed(), "{:?}", rep.failures());
        assert!(matches!(rep.stabilizable, crate::model::Certificate::Passed { ref witness, .. } if witness == "F = 0"));

        let Instance::Scare(inst) = gen_instance(InstanceKind::Scare, 3, 2, 3, 5).unwrap().to_instance().unwrap()
        else {
            panic!()
        };
        let ab = closed_loop_op_continuous(&inst, &Matrix::zeros(2, 3)).unwrap().spectral_abscissa();
        assert!(ab <= -0.5 + 1e-9, "{ab}");
        assert!((ab + 0.5).abs() < 1e-9);
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.json");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(fs::read(&p).unwrap(), b"two");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
