use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::SpectralField;

/// Which unknown a trajectory describes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variable {
    /// `v = α u`, the solution of the random PDE.
    Transformed,
    /// `u`, the solution of the stochastic equation.
    Physical,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    AbortedBlowup,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StepStats {
    pub dt: f64,
    pub steps: usize,
    /// Largest `u_max · N · dt` seen at recorded instants.
    pub max_cfl: f64,
    pub nonlinear_evals: usize,
}

/// Diagnostics recorded along one trajectory.
///
/// Norms follow the crate's `(2π)³` convention; `h1 = |·|₂ + ‖·‖₁`.
/// `dissipation` is the running trapezoid integral of `‖·‖₂²` over every step.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRecord {
    pub variable: Variable,
    pub status: RunStatus,
    pub times: Vec<f64>,
    pub alpha: Vec<f64>,
    pub linf: Vec<f64>,
    pub semi_half: Vec<f64>,
    pub semi_one: Vec<f64>,
    pub semi_three_half: Vec<f64>,
    pub l2: Vec<f64>,
    pub h1: Vec<f64>,
    pub mean: Vec<[f64; 3]>,
    pub dissipation: Vec<f64>,
    /// Optional `|·|_p` column for the order given.
    pub lp: Option<(f64, Vec<f64>)>,
    pub stats: StepStats,
    pub blowup_time: Option<f64>,
    /// State at the last recorded instant, when produced by a solver.
    pub final_state: Option<SpectralField>,
}

pub const CSV_COLUMNS: [&str; 12] = [
    "t",
    "alpha",
    "linf_v",
    "semi_half",
    "semi_one",
    "semi_three_half",
    "l2",
    "h1",
    "mean_1",
    "mean_2",
    "mean_3",
    "dissipation",
];

const META_PREFIX: &str = "# meta: ";

impl TrajectoryRecord {
    pub(crate) fn empty(variable: Variable, dt: f64) -> Self {
        Self {
            variable,
            status: RunStatus::Completed,
            times: Vec::new(),
            alpha: Vec::new(),
            linf: Vec::new(),
            semi_half: Vec::new(),
            semi_one: Vec::new(),
            semi_three_half: Vec::new(),
            l2: Vec::new(),
            h1: Vec::new(),
            mean: Vec::new(),
            dissipation: Vec::new(),
            lp: None,
            stats: StepStats {
                dt,
                ..StepStats::default()
            },
            blowup_time: None,
            final_state: None,
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Euclidean magnitude of the spatial mean at each instant.
    pub fn mean_magnitude(&self) -> Vec<f64> {
        self.mean
            .iter()
            .map(|m| (m[0] * m[0] + m[1] * m[1] + m[2] * m[2]).sqrt())
            .collect()
    }

    /// Checks the structural invariants: equal column lengths, finite values,
    /// nondecreasing dissipation.
    pub fn validate(&self) -> Result<()> {
        let n = self.times.len();
        let cols: [(&str, &Vec<f64>); 9] = [
            ("alpha", &self.alpha),
            ("linf_v", &self.linf),
            ("semi_half", &self.semi_half),
            ("semi_one", &self.semi_one),
            ("semi_three_half", &self.semi_three_half),
            ("l2", &self.l2),
            ("h1", &self.h1),
            ("dissipation", &self.dissipation),
            ("t", &self.times),
        ];
        for (name, col) in cols {
            if col.len() != n {
                return Err(Error::Data(format!("column {name} has {} rows, expected {n}", col.len())));
            }
            if col.iter().any(|x| !x.is_finite()) {
                return Err(Error::Data(format!("column {name} contains non-finite values")));
            }
        }
        if self.mean.len() != n || self.mean.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::Data("mean columns malformed".into()));
        }
        if self.dissipation.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Data("dissipation integral decreases".into()));
        }
        Ok(())
    }

    /// Writes the CSV body preceded by `# meta: {json}` comment lines.
    pub fn write_csv<W: Write>(&self, mut w: W, meta: &serde_json::Value) -> Result<()> {
        let mut meta = meta.clone();
        if let serde_json::Value::Object(map) = &mut meta {
            map.insert("variable".into(), serde_json::to_value(self.variable).expect("enum"));
            map.insert("status".into(), serde_json::to_value(self.status).expect("enum"));
            map.insert("stats".into(), serde_json::to_value(self.stats).expect("plain struct"));
            map.insert("blowup_time".into(), serde_json::to_value(self.blowup_time).expect("f64"));
            if let Some((p, _)) = &self.lp {
                map.insert("lp_order".into(), serde_json::to_value(p).expect("f64"));
            }
        }
        writeln!(w, "{META_PREFIX}{meta}")?;
        let mut header = CSV_COLUMNS.join(",");
        if self.lp.is_some() {
            header.push_str(",lp_v");
        }
        writeln!(w, "{header}")?;
        for i in 0..self.len() {
            let m = self.mean[i];
            write!(
                w,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                self.times[i],
                self.alpha[i],
                self.linf[i],
                self.semi_half[i],
                self.semi_one[i],
                self.semi_three_half[i],
                self.l2[i],
                self.h1[i],
                m[0],
                m[1],
                m[2],
                self.dissipation[i]
            )?;
            if let Some((_, col)) = &self.lp {
                write!(w, ",{}", col[i])?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    /// Parses a CSV written by [`write_csv`], returning the record and its metadata.
    pub fn read_csv<R: BufRead>(r: R) -> Result<(TrajectoryRecord, serde_json::Value)> {
        let mut meta = serde_json::Value::Object(Default::default());
        let mut header: Option<Vec<String>> = None;
        let mut rows: Vec<(usize, Vec<f64>)> = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            let lineno = i + 1;
            let trimmed = line.trim();
            if let Some(json) = trimmed.strip_prefix(META_PREFIX) {
                meta = serde_json::from_str(json).map_err(|e| Error::Parse {
                    line: lineno,
                    message: format!("bad metadata: {e}"),
                })?;
                continue;
            }
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            if header.is_none() {
                let cols: Vec<String> = trimmed.split(',').map(|s| s.trim().to_string()).collect();
                if cols.len() < CSV_COLUMNS.len() || cols[..CSV_COLUMNS.len()] != CSV_COLUMNS {
                    return Err(Error::Parse {
                        line: lineno,
                        message: format!("unexpected header, expected {}", CSV_COLUMNS.join(",")),
                    });
                }
                header = Some(cols);
                continue;
            }
            let width = header.as_ref().map_or(0, Vec::len);
            let values: Vec<f64> = trimmed
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse {
                    line: lineno,
                    message: format!("bad number: {e}"),
                })?;
            if values.len() != width {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("expected {width} fields, found {}", values.len()),
                });
            }
            rows.push((lineno, values));
        }
        let header = header.ok_or(Error::Parse {
            line: 0,
            message: "missing header".into(),
        })?;

        let get = |key: &str| meta.get(key).cloned();
        let variable = get("variable")
            .and_then(|v| serde_json::from_value(v).ok())
            .unwrap_or(Variable::Transformed);
        let mut rec = TrajectoryRecord::empty(variable, 0.0);
        rec.status = get("status")
            .and_then(|v| serde_json::from_value(v).ok())
            .unwrap_or(RunStatus::Completed);
        rec.stats = get("stats")
            .and_then(|v| serde_json::from_value(v).ok())
            .unwrap_or_default();
        rec.blowup_time = get("blowup_time").and_then(|v| v.as_f64());
        let lp_order = header
            .iter()
            .any(|h| h == "lp_v")
            .then(|| get("lp_order").and_then(|v| v.as_f64()).unwrap_or(f64::NAN));
        let mut lp_col = Vec::new();
        for (lineno, v) in rows {
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::Parse {
                    line: lineno,
                    message: "non-finite value".into(),
                });
            }
            rec.times.push(v[0]);
            rec.alpha.push(v[1]);
            rec.linf.push(v[2]);
            rec.semi_half.push(v[3]);
            rec.semi_one.push(v[4]);
            rec.semi_three_half.push(v[5]);
            rec.l2.push(v[6]);
            rec.h1.push(v[7]);
            rec.mean.push([v[8], v[9], v[10]]);
            rec.dissipation.push(v[11]);
            if lp_order.is_some() {
                lp_col.push(v[12]);
            }
        }
        rec.lp = lp_order.map(|p| (p, lp_col));
        Ok((rec, meta))
    }
}
