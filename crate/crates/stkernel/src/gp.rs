//! Gram matrices and Gaussian-process prediction with a known constant mean.

use std::io::{BufRead, Write};

use rayon::prelude::*;

use crate::error::{GpError, KernelError};
use crate::io::{read_csv, write_csv};
use crate::kernel::{interaction_ratio, KernelModel, SpaceTimeCovariance};
use crate::scalar::{c, Scalar};

/// Initial diagonal jitter relative to C(0,0).
pub const JITTER_START: f64 = 1e-12;
/// Largest diagonal jitter relative to C(0,0).
pub const JITTER_MAX: f64 = 1e-6;
/// Predictive variances above -VARIANCE_TOL·sill are clamped to zero.
pub const VARIANCE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimePoint<T> {
    pub s: Vec<T>,
    pub t: T,
}

impl<T: Scalar> SpaceTimePoint<T> {
    pub fn new(s: Vec<T>, t: T) -> Self {
        Self { s, t }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeDataset<T> {
    points: Vec<SpaceTimePoint<T>>,
    values: Vec<T>,
    mean: T,
}

impl<T: Scalar> SpaceTimeDataset<T> {
    pub fn new(points: Vec<SpaceTimePoint<T>>, values: Vec<T>, mean: T) -> Result<Self, GpError> {
        if points.is_empty() {
            return Err(GpError::EmptyDataset);
        }
        if points.len() != values.len() {
            return Err(GpError::LengthMismatch {
                points: points.len(),
                values: values.len(),
            });
        }
        let d = points[0].s.len();
        if let Some(p) = points.iter().find(|p| p.s.len() != d) {
            return Err(GpError::DimensionMismatch {
                expected: d,
                got: p.s.len(),
            });
        }
        Ok(Self {
            points,
            values,
            mean,
        })
    }

    pub fn points(&self) -> &[SpaceTimePoint<T>] {
        &self.points
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn mean(&self) -> T {
        self.mean
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Reads `s1,...,sd,t,z` rows.
    pub fn read_csv(reader: impl BufRead, mean: T) -> Result<Self, GpError> {
        let (header, rows) = read_csv(reader).map_err(GpError::Io)?;
        if header.len() < 3 || header[header.len() - 1] != "z" || header[header.len() - 2] != "t" {
            return Err(GpError::Io("header must be s1,...,sd,t,z".into()));
        }
        let d = header.len() - 2;
        let mut points = Vec::with_capacity(rows.len());
        let mut values = Vec::with_capacity(rows.len());
        for row in rows {
            points.push(SpaceTimePoint::new(
                row[..d].iter().map(|&x| T::of(x)).collect(),
                T::of(row[d]),
            ));
            values.push(T::of(row[d + 1]));
        }
        Self::new(points, values, mean)
    }
}

/// Reads query points from `s1,...,sd,t` rows (extra columns are ignored).
pub fn read_points_csv<T: Scalar>(reader: impl BufRead) -> Result<Vec<SpaceTimePoint<T>>, GpError> {
    let (header, rows) = read_csv(reader).map_err(GpError::Io)?;
    let t_col = header
        .iter()
        .position(|h| h == "t")
        .ok_or_else(|| GpError::Io("missing t column".into()))?;
    Ok(rows
        .into_iter()
        .map(|r| {
            SpaceTimePoint::new(
                r[..t_col].iter().map(|&x| T::of(x)).collect(),
                T::of(r[t_col]),
            )
        })
        .collect())
}

/// Writes `s1,...,sd,t,mean,variance` rows.
pub fn write_predictions_csv<T: Scalar>(
    w: impl Write,
    query: &[SpaceTimePoint<T>],
    means: &[T],
    variances: &[T],
) -> std::io::Result<()> {
    let d = query.first().map_or(0, |p| p.s.len());
    let mut header: Vec<String> = (1..=d).map(|i| format!("s{i}")).collect();
    header.extend(["t", "mean", "variance"].map(String::from));
    let rows = query.iter().zip(means).zip(variances).map(|((p, m), v)| {
        let mut row: Vec<f64> = p.s.iter().map(|x| x.f64()).collect();
        row.extend([p.t.f64(), m.f64(), v.f64()]);
        row
    });
    write_csv(w, &header, rows)
}

/// Dense symmetric covariance matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix<T> {
    n: usize,
    data: Vec<T>,
    /// JSON of the model that produced the matrix.
    pub model_id: String,
}

impl<T: Scalar> GramMatrix<T> {
    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.n + j]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn trace(&self) -> T {
        (0..self.n).fold(T::zero(), |acc, i| acc + self.get(i, i))
    }

    /// Smallest eigenvalue, computed in double precision.
    pub fn min_eigenvalue(&self) -> f64 {
        let m = nalgebra::DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j).f64());
        m.symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

fn check_dim<T: Scalar>(m: &KernelModel<T>, p: &SpaceTimePoint<T>) -> Result<(), GpError> {
    if p.s.len() != m.dim() {
        return Err(GpError::DimensionMismatch {
            expected: m.dim(),
            got: p.s.len(),
        });
    }
    Ok(())
}

fn cross_cov<T: Scalar>(
    m: &KernelModel<T>,
    a: &SpaceTimePoint<T>,
    b: &SpaceTimePoint<T>,
) -> Result<T, KernelError> {
    let ds: Vec<T> = a.s.iter().zip(&b.s).map(|(x, y)| *x - *y).collect();
    m.covariance(m.spatial_lag(&ds), a.t - b.t)
}

/// C_ij = C(‖s_i - s_j‖, t_i - t_j) + nugget·[i = j], filled from i ≤ j.
pub fn gram<T: Scalar>(
    m: &KernelModel<T>,
    pts: &[SpaceTimePoint<T>],
) -> Result<GramMatrix<T>, GpError> {
    for p in pts {
        check_dim(m, p)?;
    }
    let n = pts.len();
    let upper: Vec<Vec<T>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (i..n)
                .map(|j| {
                    let v = cross_cov(m, &pts[i], &pts[j])?;
                    Ok(if i == j { v + m.nugget() } else { v })
                })
                .collect::<Result<Vec<T>, KernelError>>()
        })
        .collect::<Result<_, _>>()?;
    let mut data = vec![T::zero(); n * n];
    for (i, row) in upper.iter().enumerate() {
        for (off, &v) in row.iter().enumerate() {
            let j = i + off;
            data[i * n + j] = v;
            data[j * n + i] = v;
        }
    }
    Ok(GramMatrix {
        n,
        data,
        model_id: m.to_json(),
    })
}

/// Lower Cholesky factor L (row-major) of a + jitter·I; Err carries the
/// failing pivot.
fn cholesky<T: Scalar>(a: &[T], n: usize, jitter: T) -> Result<Vec<T>, usize> {
    let mut l = vec![T::zero(); n * n];
    for j in 0..n {
        let mut d = a[j * n + j] + jitter;
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if !(d > T::zero()) {
            return Err(j);
        }
        let d = d.sqrt();
        l[j * n + j] = d;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / d;
        }
    }
    Ok(l)
}

/// Cholesky factor of a Gram matrix.
#[derive(Debug, Clone)]
pub struct Factor<T> {
    n: usize,
    l: Vec<T>,
    /// Diagonal jitter that was needed, zero when none.
    pub jitter: T,
}

impl<T: Scalar> Factor<T> {
    /// Factorizes without jitter, then with jitter from JITTER_START·C(0,0)
    /// growing tenfold up to JITTER_MAX·C(0,0).
    pub fn new(g: &GramMatrix<T>, c00: T) -> Result<Self, GpError> {
        let mut jitter = T::zero();
        let mut next = c::<T>(JITTER_START) * c00;
        let cap = c::<T>(JITTER_MAX) * c00 * c::<T>(1.000_001);
        loop {
            match cholesky(&g.data, g.n, jitter) {
                Ok(l) => return Ok(Self { n: g.n, l, jitter }),
                Err(pivot) => {
                    if next > cap {
                        return Err(GpError::NotPositiveDefinite { pivot });
                    }
                    jitter = next;
                    next *= c::<T>(10.0);
                }
            }
        }
    }

    /// Solves L y = b.
    pub fn forward(&self, b: &[T]) -> Vec<T> {
        let n = self.n;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.l[i * n + k] * y[k];
            }
            y[i] = s / self.l[i * n + i];
        }
        y
    }

    /// Solves Lᵀ x = y.
    pub fn backward(&self, y: &[T]) -> Vec<T> {
        let n = self.n;
        let mut x = y.to_vec();
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..n {
                s -= self.l[k * n + i] * x[k];
            }
            x[i] = s / self.l[i * n + i];
        }
        x
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        self.backward(&self.forward(b))
    }
}

/// Conditional means and variances at `query`.
pub fn predict<T: Scalar>(
    m: &KernelModel<T>,
    data: &SpaceTimeDataset<T>,
    query: &[SpaceTimePoint<T>],
) -> Result<(Vec<T>, Vec<T>), GpError> {
    for p in query {
        check_dim(m, p)?;
    }
    let g = gram(m, data.points())?;
    let factor = Factor::new(&g, m.variance())?;
    let centered: Vec<T> = data.values().iter().map(|&z| z - data.mean()).collect();
    let alpha = factor.solve(&centered);
    let sill = m.sill();
    let tol = c::<T>(VARIANCE_TOL) * sill;
    let mut means = Vec::with_capacity(query.len());
    let mut vars = Vec::with_capacity(query.len());
    for (qi, q) in query.iter().enumerate() {
        let kstar = data
            .points()
            .iter()
            .map(|p| cross_cov(m, q, p))
            .collect::<Result<Vec<T>, _>>()?;
        let mean = data.mean()
            + kstar
                .iter()
                .zip(&alpha)
                .fold(T::zero(), |acc, (k, a)| acc + *k * *a);
        let v = factor.forward(&kstar);
        let var = sill - v.iter().fold(T::zero(), |acc, x| acc + *x * *x);
        if var < -tol {
            return Err(GpError::NegativeVariance {
                index: qi,
                value: var.f64(),
            });
        }
        means.push(mean);
        vars.push(var.max(T::zero()));
    }
    Ok((means, vars))
}

/// Ratio of the one-observation conditional mean fluctuation under `m` to
/// that under its separable surrogate: Q_int at the observation-query lag.
pub fn prediction_ratio<T: Scalar>(
    m: &KernelModel<T>,
    obs: &SpaceTimePoint<T>,
    query: &SpaceTimePoint<T>,
) -> Result<T, GpError> {
    check_dim(m, obs)?;
    check_dim(m, query)?;
    let ds: Vec<T> = query.s.iter().zip(&obs.s).map(|(x, y)| *x - *y).collect();
    Ok(interaction_ratio(m, m.spatial_lag(&ds), query.t - obs.t)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{Damping, Dispersion, LdhoParams, Regime};

    fn model(nugget: f64) -> KernelModel<f64> {
        let p = LdhoParams::new(
            Dispersion::Quadratic,
            2,
            1.0,
            3.0,
            Damping::Damped {
                omega_d: 1.5 * std::f64::consts::PI,
                regime: Regime::Underdamped,
            },
            1.0,
            0.4,
        )
        .unwrap();
        KernelModel::ldho(p, nugget).unwrap()
    }

    #[test]
    fn single_point_gram() {
        let m = model(0.2);
        let g = gram(&m, &[SpaceTimePoint::new(vec![1.0, 2.0], 0.5)]).unwrap();
        assert_eq!(g.size(), 1);
        assert!((g.get(0, 0) - m.sill()).abs() < 1e-15);
    }

    #[test]
    fn coincident_points_are_rank_one() {
        let m = model(0.0);
        let p = SpaceTimePoint::new(vec![1.0, 2.0], 0.5);
        let g = gram(&m, &[p.clone(), p]).unwrap();
        assert!(g.min_eigenvalue().abs() < 1e-14);
        assert!((g.trace() - 2.0 * m.variance()).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch() {
        let m = model(0.0);
        let r = gram(&m, &[SpaceTimePoint::new(vec![1.0], 0.5)]);
        assert!(matches!(
            r,
            Err(GpError::DimensionMismatch {
                expected: 2,
                got: 1
            })
        ));
    }

    #[test]
    fn cholesky_solves() {
        let a = [4.0, 2.0, 0.4, 2.0, 5.0, 1.0, 0.4, 1.0, 3.0];
        let g = GramMatrix {
            n: 3,
            data: a.to_vec(),
            model_id: String::new(),
        };
        let f = Factor::new(&g, 1.0).unwrap();
        assert_eq!(f.jitter, 0.0);
        let x = f.solve(&[1.0, 2.0, 3.0]);
        for i in 0..3 {
            let bi: f64 = (0..3).map(|j| a[i * 3 + j] * x[j]).sum();
            assert!((bi - (i + 1) as f64).abs() < 1e-14);
        }
        let bad = GramMatrix {
            n: 2,
            data: vec![1.0, 2.0, 2.0, 1.0],
            model_id: String::new(),
        };
        assert!(matches!(
            Factor::new(&bad, 1.0),
            Err(GpError::NotPositiveDefinite { pivot: 1 })
        ));
    }
}
