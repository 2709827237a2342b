//! Cost-function families, tabulation onto product grids, and numerical
//! detection of the structural properties (affine, concave, convex in one
//! variable) that the structural results hypothesize.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Profile `h` of a translation-invariant cost `c(x, y) = h(x - y)`.
#[derive(Clone)]
pub enum TranslationKernel {
    /// `h(t) = -t^2`
    NegSquare,
    /// `h(t) = -|t|`
    NegAbs,
    /// `h(t) = cos(t)`
    Cos,
    Custom {
        name: String,
        h: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    },
}

impl TranslationKernel {
    pub fn custom<F>(name: impl Into<String>, h: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::Custom {
            name: name.into(),
            h: Arc::new(h),
        }
    }

    fn eval(&self, t: f64) -> f64 {
        match self {
            Self::NegSquare => -(t * t),
            Self::NegAbs => -t.abs(),
            Self::Cos => t.cos(),
            Self::Custom { h, .. } => h(t),
        }
    }

    fn name(&self) -> &str {
        match self {
            Self::NegSquare => "neg_square",
            Self::NegAbs => "neg_abs",
            Self::Cos => "cos",
            Self::Custom { name, .. } => name,
        }
    }
}

impl fmt::Debug for TranslationKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Analytic cost families.
#[derive(Debug, Clone)]
pub enum CostSpec {
    /// `c(x, y) = x y`, the classical Fenchel pairing.
    Bilinear,
    /// `c(x, y) = a(y) x + b(y)` with `a`, `b` polynomials given by their
    /// coefficients in ascending powers.
    OneAffine { a: Vec<f64>, b: Vec<f64> },
    /// `c(x, y) = -s (x - y)^2`, `s > 0`.
    NegQuadratic { scale: f64 },
    /// `c(x, y) = -log(1 - x y)`, defined only where `x y < 1`.
    Reflector,
    /// `c(x, y) = h(x - y)`.
    Translation(TranslationKernel),
}

fn horner(coeffs: &[f64], t: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * t + c)
}

impl CostSpec {
    pub fn neg_quadratic(scale: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "neg_quadratic scale must be positive, got {scale}"
            )));
        }
        Ok(Self::NegQuadratic { scale })
    }

    pub fn one_affine(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if a.iter().chain(&b).any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter("one_affine coefficients must be finite".into()));
        }
        Ok(Self::OneAffine { a, b })
    }

    pub fn family(&self) -> &'static str {
        match self {
            Self::Bilinear => "bilinear",
            Self::OneAffine { .. } => "one_affine",
            Self::NegQuadratic { .. } => "neg_quadratic",
            Self::Reflector => "reflector",
            Self::Translation(_) => "translation",
        }
    }

    pub fn evaluate(&self, x: f64, y: f64) -> Result<f64> {
        let v = match self {
            Self::Bilinear => x * y,
            Self::OneAffine { a, b } => horner(a, y) * x + horner(b, y),
            Self::NegQuadratic { scale } => {
                let d = x - y;
                -(scale * (d * d))
            }
            Self::Reflector => {
                let xy = x * y;
                if !(xy < 1.0) {
                    return Err(Error::CostDomain {
                        family: self.to_string(),
                        x,
                        y,
                    });
                }
                -(-xy).ln_1p()
            }
            Self::Translation(k) => k.eval(x - y),
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::CostDomain {
                family: self.to_string(),
                x,
                y,
            })
        }
    }

    /// Closed-form `dc/dx (x, y)`.
    pub fn partial_x(&self, x: f64, y: f64) -> Result<f64> {
        match self {
            Self::Bilinear => Ok(y),
            Self::OneAffine { a, .. } => Ok(horner(a, y)),
            Self::NegQuadratic { scale } => Ok(-2.0 * scale * (x - y)),
            Self::Reflector => {
                let xy = x * y;
                if !(xy < 1.0) {
                    return Err(Error::CostDomain {
                        family: self.to_string(),
                        x,
                        y,
                    });
                }
                Ok(y / (1.0 - xy))
            }
            Self::Translation(_) => Err(Error::NotAnalytic(self.to_string())),
        }
    }

    pub fn has_partial_x(&self) -> bool {
        !matches!(self, Self::Translation(_))
    }
}

impl fmt::Display for CostSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[f64]| v.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",");
        match self {
            Self::Bilinear | Self::Reflector => f.write_str(self.family()),
            Self::OneAffine { a, b } => write!(f, "one_affine:{};{}", join(a), join(b)),
            Self::NegQuadratic { scale } => write!(f, "neg_quadratic:{scale}"),
            Self::Translation(k) => write!(f, "translation:{}", k.name()),
        }
    }
}

impl Serialize for CostSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

fn parse_coeffs(s: &str) -> Result<Vec<f64>> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("coefficient {t:?}: {e}")))
        })
        .collect()
}

impl FromStr for CostSpec {
    type Err = Error;

    /// Parses the family tokens `bilinear`, `one_affine:a0,a1,..;b0,b1,..`,
    /// `neg_quadratic[:s]`, `reflector` and `translation:<kernel>`.
    fn from_str(s: &str) -> Result<Self> {
        let (family, params) = match s.split_once(':') {
            Some((f, p)) => (f.trim(), Some(p.trim())),
            None => (s.trim(), None),
        };
        match (family, params) {
            ("bilinear", None) => Ok(Self::Bilinear),
            ("reflector", None) => Ok(Self::Reflector),
            ("neg_quadratic", None) => Self::neg_quadratic(1.0),
            ("neg_quadratic", Some(p)) => Self::neg_quadratic(
                p.parse().map_err(|e| Error::Parse(format!("neg_quadratic scale {p:?}: {e}")))?,
            ),
            ("one_affine", Some(p)) => {
                let (a, b) = p
                    .split_once(';')
                    .ok_or_else(|| Error::Parse("one_affine expects `a0,a1,..;b0,b1,..`".into()))?;
                Self::one_affine(parse_coeffs(a)?, parse_coeffs(b)?)
            }
            ("translation", Some(k)) => match k {
                "neg_square" => Ok(Self::Translation(TranslationKernel::NegSquare)),
                "neg_abs" => Ok(Self::Translation(TranslationKernel::NegAbs)),
                "cos" => Ok(Self::Translation(TranslationKernel::Cos)),
                other => Err(Error::Parse(format!(
                    "unknown translation kernel {other:?} (expected neg_square, neg_abs or cos)"
                ))),
            },
            _ => Err(Error::Parse(format!(
                "unknown cost {s:?} (expected bilinear, one_affine:..;.., neg_quadratic[:s], reflector, translation:<kernel>)"
            ))),
        }
    }
}

/// A cost tabulated on a product grid, `entries[i][j] = c(x_i, y_j)`,
/// stored row-major.
#[derive(Debug, Clone)]
pub struct CostMatrix {
    grid_i: Grid,
    grid_j: Grid,
    entries: Vec<f64>,
    spec: Option<CostSpec>,
    label: String,
}

impl CostMatrix {
    pub fn tabulate(spec: &CostSpec, grid_i: Grid, grid_j: Grid) -> Result<Self> {
        let (n, m) = (grid_i.len(), grid_j.len());
        let mut entries = Vec::with_capacity(n * m);
        for i in 0..n {
            let x = grid_i.point(i);
            for j in 0..m {
                let y = grid_j.point(j);
                let v = spec.evaluate(x, y).map_err(|_| Error::CostDomainAt {
                    family: spec.to_string(),
                    i,
                    j,
                    x,
                    y,
                })?;
                entries.push(v);
            }
        }
        Ok(Self {
            grid_i,
            grid_j,
            entries,
            spec: Some(spec.clone()),
            label: spec.to_string(),
        })
    }

    /// Tabulates an arbitrary continuous cost given pointwise.
    pub fn from_fn<F>(label: impl Into<String>, grid_i: Grid, grid_j: Grid, c: F) -> Result<Self>
    where
        F: Fn(f64, f64) -> f64,
    {
        let mut entries = Vec::with_capacity(grid_i.len() * grid_j.len());
        for i in 0..grid_i.len() {
            for j in 0..grid_j.len() {
                entries.push(c(grid_i.point(i), grid_j.point(j)));
            }
        }
        Self::from_entries(label, grid_i, grid_j, entries)
    }

    pub fn from_entries(label: impl Into<String>, grid_i: Grid, grid_j: Grid, entries: Vec<f64>) -> Result<Self> {
        let m = grid_j.len();
        if entries.len() != grid_i.len() * m {
            return Err(Error::LengthMismatch {
                expected: grid_i.len() * m,
                got: entries.len(),
            });
        }
        if let Some(k) = entries.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteCost { i: k / m, j: k % m });
        }
        Ok(Self {
            grid_i,
            grid_j,
            entries,
            spec: None,
            label: label.into(),
        })
    }

    pub fn grid_i(&self) -> &Grid {
        &self.grid_i
    }

    pub fn grid_j(&self) -> &Grid {
        &self.grid_j
    }

    pub fn rows(&self) -> usize {
        self.grid_i.len()
    }

    pub fn cols(&self) -> usize {
        self.grid_j.len()
    }

    pub fn spec(&self) -> Option<&CostSpec> {
        self.spec.as_ref()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.grid_j.len() + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        let m = self.grid_j.len();
        &self.entries[i * m..(i + 1) * m]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows()).map(|i| self.get(i, j)).collect()
    }

    pub fn sup_abs(&self) -> f64 {
        self.entries.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    /// Entrywise negation. The analytic spec is dropped since no family
    /// describes `-c` in general.
    pub fn negated(&self) -> Self {
        Self {
            grid_i: self.grid_i,
            grid_j: self.grid_j,
            entries: self.entries.iter().map(|v| -v).collect(),
            spec: None,
            label: format!("-({})", self.label),
        }
    }

    /// Largest `|c(x_{i+1}, y) - c(x_i, y)| / h_x` over the table.
    pub fn lipschitz_x(&self) -> f64 {
        let h = self.grid_i.step();
        let m = self.cols();
        let mut best = 0.0_f64;
        for i in 0..self.rows() - 1 {
            for j in 0..m {
                best = best.max(((self.get(i + 1, j) - self.get(i, j)) / h).abs());
            }
        }
        best
    }

    /// Largest `|c(x, y_{j+1}) - c(x, y_j)| / h_y` over the table.
    pub fn lipschitz_y(&self) -> f64 {
        let h = self.grid_j.step();
        let mut best = 0.0_f64;
        for i in 0..self.rows() {
            let r = self.row(i);
            for w in r.windows(2) {
                best = best.max(((w[1] - w[0]) / h).abs());
            }
        }
        best
    }

    /// Largest `|c(x_{i-1}, y) - 2 c(x_i, y) + c(x_{i+1}, y)|` over the table.
    pub fn max_abs_second_difference_x(&self) -> f64 {
        let mut best = 0.0_f64;
        for i in 1..self.rows().saturating_sub(1) {
            for j in 0..self.cols() {
                let d = self.get(i - 1, j) - 2.0 * self.get(i, j) + self.get(i + 1, j);
                best = best.max(d.abs());
            }
        }
        best
    }
}

/// Structural properties detectable from second differences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StructureProperty {
    OneAffine,
    TwoAffine,
    OneConcave,
    OneConvex,
    TwoConcave,
    /// Concave along every row, column and both index diagonals.
    JointlyConcave,
}

impl StructureProperty {
    pub fn token(self) -> &'static str {
        match self {
            Self::OneAffine => "one_affine",
            Self::TwoAffine => "two_affine",
            Self::OneConcave => "one_concave",
            Self::OneConvex => "one_convex",
            Self::TwoConcave => "two_concave",
            Self::JointlyConcave => "jointly_concave",
        }
    }
}

impl fmt::Display for StructureProperty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StructureVerdict {
    pub property: StructureProperty,
    pub holds: bool,
    pub max_violation: f64,
    pub tol: f64,
    /// The three `(i, j)` cells of the first second difference that
    /// exceeded `tol`.
    pub witness: Option<[(usize, usize); 3]>,
}

/// `1e-9 * (1 + max |entry|)`.
pub fn default_structure_tol(matrix: &CostMatrix) -> f64 {
    1e-9 * (1.0 + matrix.sup_abs())
}

#[derive(Clone, Copy)]
enum Sign {
    /// `|d2| <= tol`
    Zero,
    /// `d2 <= tol`
    NonPositive,
    /// `d2 >= -tol`
    NonNegative,
}

impl Sign {
    fn violation(self, d2: f64) -> f64 {
        match self {
            Sign::Zero => d2.abs(),
            Sign::NonPositive => d2.max(0.0),
            Sign::NonNegative => (-d2).max(0.0),
        }
    }
}

/// Checks `property` on the tabulated cost via second differences along the
/// relevant axis. `tol` defaults to [`default_structure_tol`].
pub fn check_structure(matrix: &CostMatrix, property: StructureProperty, tol: Option<f64>) -> Result<StructureVerdict> {
    let tol = tol.unwrap_or_else(|| default_structure_tol(matrix));
    let (n, m) = (matrix.rows(), matrix.cols());
    let need = |points: usize| -> Result<()> {
        if points < 3 {
            Err(Error::GridTooSmall {
                property: property.to_string(),
                points,
            })
        } else {
            Ok(())
        }
    };
    let directions: &[(isize, isize)] = match property {
        StructureProperty::OneAffine | StructureProperty::OneConcave | StructureProperty::OneConvex => {
            need(n)?;
            &[(1, 0)]
        }
        StructureProperty::TwoAffine | StructureProperty::TwoConcave => {
            need(m)?;
            &[(0, 1)]
        }
        StructureProperty::JointlyConcave => {
            need(n)?;
            need(m)?;
            &[(1, 0), (0, 1), (1, 1), (1, -1)]
        }
    };
    let sign = match property {
        StructureProperty::OneAffine | StructureProperty::TwoAffine => Sign::Zero,
        StructureProperty::OneConcave | StructureProperty::TwoConcave | StructureProperty::JointlyConcave => {
            Sign::NonPositive
        }
        StructureProperty::OneConvex => Sign::NonNegative,
    };

    let mut max_violation = 0.0_f64;
    let mut witness = None;
    for &(di, dj) in directions {
        for i in 0..n as isize {
            for j in 0..m as isize {
                let (a, b) = (i - di, j - dj);
                let (c, d) = (i + di, j + dj);
                let inside = |r: isize, s: isize| r >= 0 && s >= 0 && r < n as isize && s < m as isize;
                if !inside(a, b) || !inside(c, d) {
                    continue;
                }
                let cells = [(a as usize, b as usize), (i as usize, j as usize), (c as usize, d as usize)];
                let d2 = matrix.get(cells[0].0, cells[0].1) - 2.0 * matrix.get(cells[1].0, cells[1].1)
                    + matrix.get(cells[2].0, cells[2].1);
                let v = sign.violation(d2);
                if v > max_violation {
                    max_violation = v;
                }
                if v > tol && witness.is_none() {
                    witness = Some(cells);
                }
            }
        }
    }
    Ok(StructureVerdict {
        property,
        holds: max_violation <= tol,
        max_violation,
        tol,
        witness,
    })
}
