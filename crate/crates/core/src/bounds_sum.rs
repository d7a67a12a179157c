//! Sum-form bounds on `sum_i I(A^i)` for `m` observables: the two-cell `B2`
//! family and `L_Ma`.
//!
//! Cells are addressed as 0-based `(row, col)` pairs; names and reports print
//! them 1-based.

use std::fmt;

use crate::error::{Error, Result};
use crate::metric::{sampled_coords, GammaFactorization, Observable};

pub type Cell = (usize, usize);

/// Sampled coordinates of `m` observables, one row per observable.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledMatrix {
    rows: Vec<Vec<f64>>,
    labels: Vec<String>,
    total: f64,
}

impl SampledMatrix {
    pub fn new(rows: Vec<Vec<f64>>, labels: Vec<String>) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::LengthMismatch {
                left: rows.len(),
                right: labels.len(),
            });
        }
        let n = rows.first().map_or(0, Vec::len);
        for row in &rows {
            if row.len() != n {
                return Err(Error::LengthMismatch {
                    left: row.len(),
                    right: n,
                });
            }
            if let Some((index, &value)) = row.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v >= 0.0)) {
                return Err(Error::BadCoordinate { index, value });
            }
        }
        let total = rows.iter().flatten().map(|v| v * v).sum();
        Ok(SampledMatrix { rows, labels, total })
    }

    /// Unlabelled matrix; rows are named `A1`, `A2`, ...
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let labels = (1..=rows.len()).map(|i| format!("A{i}")).collect();
        Self::new(rows, labels)
    }

    pub fn m(&self) -> usize {
        self.rows.len()
    }

    pub fn n(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn get(&self, cell: Cell) -> f64 {
        self.rows[cell.0][cell.1]
    }

    /// `sum_i |X^i|^2 = sum_i I(A^i)`.
    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn row_norm_sqr(&self, i: usize) -> f64 {
        self.rows[i].iter().map(|v| v * v).sum()
    }

    fn check_cell(&self, cell: Cell) -> Result<()> {
        if cell.0 >= self.m() || cell.1 >= self.n() {
            return Err(Error::CellOutOfRange {
                row: cell.0,
                col: cell.1,
                rows: self.m(),
                cols: self.n(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SumFamily {
    Total,
    B2Cell { first: Cell, second: Cell },
    B2Max { first: Cell, second: Cell },
    B2Q { q: f64, first: Cell, second: Cell },
    LMa,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SumBoundResult {
    pub family: SumFamily,
    pub value: f64,
}

struct OneBased(Cell);

impl fmt::Display for OneBased {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.0 .0 + 1, self.0 .1 + 1)
    }
}

impl SumBoundResult {
    pub fn name(&self) -> String {
        match self.family {
            SumFamily::Total => "total".into(),
            SumFamily::B2Cell { first, second } => {
                format!("B2cell_{}_{}_{}_{}", first.0 + 1, first.1 + 1, second.0 + 1, second.1 + 1)
            }
            SumFamily::B2Max { .. } => "B2".into(),
            SumFamily::B2Q { .. } => "B2q".into(),
            SumFamily::LMa => "LMa".into(),
        }
    }

    /// The argmax cell pair of a `B2` or `B2q` result, 1-based, as `((a,b),(c,d))`.
    pub fn cells_label(&self) -> Option<String> {
        match self.family {
            SumFamily::B2Cell { first, second }
            | SumFamily::B2Max { first, second }
            | SumFamily::B2Q { first, second, .. } => Some(format!("({},{})", OneBased(first), OneBased(second))),
            _ => None,
        }
    }
}

pub fn sampled_matrix(gf: &GammaFactorization, observables: &[Observable]) -> Result<SampledMatrix> {
    let rows = observables
        .iter()
        .map(|a| sampled_coords(gf, a).map(|s| s.entries().to_vec()))
        .collect::<Result<Vec<_>>>()?;
    let labels = observables.iter().map(|a| a.name().to_string()).collect();
    SampledMatrix::new(rows, labels)
}

pub fn total(x: &SampledMatrix) -> SumBoundResult {
    SumBoundResult {
        family: SumFamily::Total,
        value: x.total,
    }
}

/// `B2((a,b),(c,d)) = total - (x_ab - x_cd)^2`.
pub fn bound_b2_cell(x: &SampledMatrix, first: Cell, second: Cell) -> Result<SumBoundResult> {
    x.check_cell(first)?;
    x.check_cell(second)?;
    if first == second {
        return Err(Error::IdenticalCells);
    }
    let gap = x.get(first) - x.get(second);
    Ok(SumBoundResult {
        family: SumFamily::B2Cell { first, second },
        value: x.total - gap * gap,
    })
}

/// Exhaustive maximum over unordered cell pairs. Pairs are visited in
/// row-major lexicographic order and only a strictly larger value replaces
/// the incumbent, so ties resolve to the lexicographically smallest pair.
pub fn bound_b2_max(x: &SampledMatrix) -> Result<SumBoundResult> {
    let (m, n) = (x.m(), x.n());
    let cells = m * n;
    if cells < 2 {
        return Err(Error::TooFewCells);
    }
    let cell = |i: usize| (i / n, i % n);
    let mut best = (f64::INFINITY, 0, 1);
    for i in 0..cells {
        let xi = x.get(cell(i));
        for j in i + 1..cells {
            let gap = xi - x.get(cell(j));
            let penalty = gap * gap;
            if penalty < best.0 {
                best = (penalty, i, j);
            }
        }
    }
    Ok(SumBoundResult {
        family: SumFamily::B2Max {
            first: cell(best.1),
            second: cell(best.2),
        },
        value: x.total - best.0,
    })
}

/// `B2q = q B2 + (1 - q) total`.
pub fn bound_b2_q(x: &SampledMatrix, q: f64) -> Result<SumBoundResult> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::BadQ { q });
    }
    let b2 = bound_b2_max(x)?;
    let SumFamily::B2Max { first, second } = b2.family else {
        unreachable!("bound_b2_max returns a B2Max family")
    };
    Ok(SumBoundResult {
        family: SumFamily::B2Q { q, first, second },
        value: q * b2.value + (1.0 - q) * x.total,
    })
}

fn pair_norms(x: &SampledMatrix, i: usize, j: usize) -> (f64, f64) {
    let (mut plus, mut minus) = (0.0, 0.0);
    for (a, b) in x.row(i).iter().zip(x.row(j)) {
        plus += (a + b) * (a + b);
        minus += (a - b) * (a - b);
    }
    (plus, minus)
}

/// `L_Ma = 1/(2(m-1)) [sum_{i<j} |X^i+X^j|^2 + 2/(m(m-1)) (sum_{i<j} |X^i-X^j|)^2]`.
///
/// Fails with `AssertionFailure` if the Cauchy-Schwarz step
/// `N sum a^2 >= (sum a)^2` on the difference norms does not hold numerically.
pub fn bound_lma(x: &SampledMatrix) -> Result<SumBoundResult> {
    let m = x.m();
    if m < 2 {
        return Err(Error::TooFewObservables { needed: 2, got: m });
    }
    let (mut plus, mut diff_sum, mut diff_sq) = (0.0, 0.0, 0.0);
    for i in 0..m {
        for j in i + 1..m {
            let (p, d) = pair_norms(x, i, j);
            plus += p;
            diff_sum += d.sqrt();
            diff_sq += d;
        }
    }
    let pairs = (m * (m - 1) / 2) as f64;
    if pairs * diff_sq + 1e-12 * (1.0 + pairs * diff_sq) < diff_sum * diff_sum {
        return Err(Error::AssertionFailure(format!(
            "fundamental inequality: {pairs} * {diff_sq} < ({diff_sum})^2"
        )));
    }
    let value = (plus + diff_sum * diff_sum / pairs) / (2.0 * (m as f64 - 1.0));
    Ok(SumBoundResult {
        family: SumFamily::LMa,
        value,
    })
}

/// `|sum_i |X^i|^2 - 1/(2(m-1)) sum_{i<j} (|X^i+X^j|^2 + |X^i-X^j|^2)|`.
pub fn parallelogram_check(x: &SampledMatrix) -> Result<f64> {
    let m = x.m();
    if m < 2 {
        return Err(Error::TooFewObservables { needed: 2, got: m });
    }
    let mut rhs = 0.0;
    for i in 0..m {
        for j in i + 1..m {
            let (p, d) = pair_norms(x, i, j);
            rhs += p + d;
        }
    }
    Ok((x.total - rhs / (2.0 * (m as f64 - 1.0))).abs())
}
