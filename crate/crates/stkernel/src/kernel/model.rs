use serde::{Deserialize, Serialize};

use crate::error::{KernelError, ParamError};
use crate::kernel::{
    check_lag, check_positive, classify_regime, Damping, Dispersion, LdhoParams, OuParams, Regime,
    SpaceTimeCovariance,
};
use crate::scalar::Scalar;

/// Marginals smaller than this fraction of C(0,0) make Q_int undefined.
pub const DEGENERATE_MARGINAL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum BaseKernel<T> {
    Ldho(LdhoParams<T>),
    Ou(OuParams<T>),
}

impl<T: Scalar> BaseKernel<T> {
    fn as_covariance(&self) -> &dyn SpaceTimeCovariance<T> {
        match self {
            Self::Ldho(p) => p,
            Self::Ou(p) => p,
        }
    }

    pub fn dispersion(&self) -> Dispersion {
        match self {
            Self::Ldho(p) => p.dispersion(),
            Self::Ou(p) => p.dispersion(),
        }
    }
}

/// A covariance model: a base kernel, optionally replaced by its separable
/// surrogate C_S(r) C_T(τ)/C(0,0), plus a nugget and optional per-axis length
/// scales applied to spatial lag vectors before taking the norm.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelModel<T> {
    base: BaseKernel<T>,
    separable: bool,
    nugget: T,
    length_scales: Option<Vec<T>>,
}

impl<T: Scalar> KernelModel<T> {
    pub fn new(base: BaseKernel<T>, nugget: T) -> Result<Self, ParamError> {
        super::check_non_negative("nugget", nugget)?;
        Ok(Self {
            base,
            separable: false,
            nugget,
            length_scales: None,
        })
    }

    pub fn ldho(p: LdhoParams<T>, nugget: T) -> Result<Self, ParamError> {
        Self::new(BaseKernel::Ldho(p), nugget)
    }

    pub fn ou(p: OuParams<T>, nugget: T) -> Result<Self, ParamError> {
        Self::new(BaseKernel::Ou(p), nugget)
    }

    /// The separable model sharing this model's marginals.
    pub fn separable_surrogate(&self) -> Result<Self, ParamError> {
        if self.separable {
            return Err(ParamError::NestedSurrogate);
        }
        Ok(Self {
            separable: true,
            ..self.clone()
        })
    }

    pub fn with_length_scales(mut self, scales: Vec<T>) -> Result<Self, ParamError> {
        if scales.len() != self.dim() {
            return Err(ParamError::LengthScales {
                expected: self.dim(),
                got: scales.len(),
            });
        }
        for &s in &scales {
            check_positive("length_scales", s)?;
        }
        self.length_scales = Some(scales);
        Ok(self)
    }

    pub fn with_nugget(&self, nugget: T) -> Result<Self, ParamError> {
        super::check_non_negative("nugget", nugget)?;
        Ok(Self {
            nugget,
            ..self.clone()
        })
    }

    pub fn base(&self) -> &BaseKernel<T> {
        &self.base
    }

    pub fn is_separable_surrogate(&self) -> bool {
        self.separable
    }

    pub fn nugget(&self) -> T {
        self.nugget
    }

    pub fn length_scales(&self) -> Option<&[T]> {
        self.length_scales.as_deref()
    }

    /// C(0,0) + nugget.
    pub fn sill(&self) -> T {
        self.variance() + self.nugget
    }

    /// Radial lag of a spatial difference vector after the length-scale transform.
    pub fn spatial_lag(&self, ds: &[T]) -> T {
        let mut acc = T::zero();
        match &self.length_scales {
            Some(ls) => {
                for (x, l) in ds.iter().zip(ls) {
                    let y = *x / *l;
                    acc += y * y;
                }
            }
            None => {
                for x in ds {
                    acc += *x * *x;
                }
            }
        }
        acc.sqrt()
    }

    /// Model semivariance C(0,0) - C(r,τ) + nugget·[lag ≠ 0].
    pub fn variogram(&self, r: T, tau: T) -> Result<T, KernelError> {
        let c = self.covariance(r, tau)?;
        if r == T::zero() && tau == T::zero() {
            return Ok(T::zero());
        }
        Ok(self.variance() - c + self.nugget)
    }

    pub fn to_spec(&self) -> ModelSpec {
        let (family, params) = match &self.base {
            BaseKernel::Ldho(p) => (
                Family::Ldho,
                ParamSpec {
                    c0: Some(p.c0().f64()),
                    tau_c: Some(p.tau_c().f64()),
                    omega0: Some(p.omega0().f64()),
                    epsilon: Some(p.epsilon().f64()),
                    b_or_xi: Some(p.interaction().f64()),
                    ..ParamSpec::default()
                },
            ),
            BaseKernel::Ou(p) => (
                Family::Ou,
                ParamSpec {
                    sigma0_sq: Some(p.sigma0_sq().f64()),
                    tau_c: Some(p.tau_c().f64()),
                    a: Some(p.a().f64()),
                    scale: Some(p.scale().f64()),
                    beta: Some(p.beta().f64()),
                    ..ParamSpec::default()
                },
            ),
        };
        ModelSpec {
            family,
            dispersion: self.base.dispersion(),
            dim: self.dim(),
            params,
            nugget: self.nugget.f64(),
            separable: self.separable,
            length_scales: self
                .length_scales
                .as_ref()
                .map(|v| v.iter().map(|x| x.f64()).collect()),
        }
    }

    pub fn from_spec(spec: &ModelSpec) -> Result<Self, ParamError> {
        let p = &spec.params;
        let need = |name: &'static str, v: Option<f64>| {
            v.ok_or_else(|| ParamError::Json(format!("missing parameter `{name}`")))
        };
        let base = match spec.family {
            Family::Ldho => {
                let damping = match (p.omega0, p.omega_d) {
                    (Some(w0), None) => Damping::Natural(T::of(w0)),
                    (None, Some(wd)) => Damping::Damped {
                        omega_d: T::of(wd),
                        regime: p.regime.unwrap_or(Regime::Underdamped),
                    },
                    (Some(_), Some(_)) => {
                        return Err(ParamError::Json(
                            "give either `omega0` or `omega_d`, not both".into(),
                        ))
                    }
                    (None, None) => {
                        return Err(ParamError::Json("missing parameter `omega0`".into()))
                    }
                };
                BaseKernel::Ldho(LdhoParams::new(
                    spec.dispersion,
                    spec.dim,
                    T::of(need("c0", p.c0)?),
                    T::of(need("tau_c", p.tau_c)?),
                    damping,
                    T::of(need("epsilon", p.epsilon)?),
                    T::of(need("b_or_xi", p.b_or_xi)?),
                )?)
            }
            Family::Ou => BaseKernel::Ou(OuParams::new(
                spec.dispersion,
                spec.dim,
                T::of(need("sigma0_sq", p.sigma0_sq)?),
                T::of(need("tau_c", p.tau_c)?),
                T::of(need("a", p.a)?),
                T::of(need("scale", p.scale)?),
                T::of(need("beta", p.beta)?),
            )?),
        };
        let mut m = Self::new(base, T::of(spec.nugget))?;
        if let Some(ls) = &spec.length_scales {
            m = m.with_length_scales(ls.iter().map(|&x| T::of(x)).collect())?;
        }
        if spec.separable {
            m = m.separable_surrogate()?;
        }
        Ok(m)
    }

    pub fn to_json(&self) -> String {
        crate::io::to_json(&self.to_spec())
    }

    pub fn from_json(s: &str) -> Result<Self, ParamError> {
        let spec: ModelSpec =
            serde_json::from_str(s).map_err(|e| ParamError::Json(e.to_string()))?;
        Self::from_spec(&spec)
    }

    /// Regime of an oscillator model, `None` for the O-U family.
    pub fn regime(&self) -> Option<Regime> {
        match &self.base {
            BaseKernel::Ldho(p) => Some(classify_regime(p)),
            BaseKernel::Ou(_) => None,
        }
    }
}

impl<T: Scalar> SpaceTimeCovariance<T> for KernelModel<T> {
    fn dim(&self) -> usize {
        self.base.as_covariance().dim()
    }

    fn covariance(&self, r: T, tau: T) -> Result<T, KernelError> {
        let k = self.base.as_covariance();
        if self.separable {
            check_lag(r)?;
            Ok(k.marginal_spatial(r) * k.marginal_temporal(tau) / k.variance())
        } else {
            k.covariance(r, tau)
        }
    }

    fn marginal_spatial(&self, r: T) -> T {
        self.base.as_covariance().marginal_spatial(r)
    }

    fn marginal_temporal(&self, tau: T) -> T {
        self.base.as_covariance().marginal_temporal(tau)
    }
}

/// Q_int = C(0,0) C(r,τ) / (C_S(r) C_T(τ)).
pub fn interaction_ratio<T: Scalar>(m: &KernelModel<T>, r: T, tau: T) -> Result<T, KernelError> {
    let c00 = m.variance();
    let cs = m.marginal_spatial(r);
    let ct = m.marginal_temporal(tau);
    let tol = T::of(DEGENERATE_MARGINAL_TOL) * c00;
    if cs.abs() <= tol || ct.abs() <= tol {
        return Err(KernelError::DegenerateMarginal {
            r: r.f64(),
            tau: tau.f64(),
        });
    }
    Ok(c00 * m.covariance(r, tau)? / (cs * ct))
}

/// C_S(r) C_T(τ) / C(0,0), the separable kernel with the marginals of `m`.
pub fn separable_surrogate<T: Scalar>(m: &KernelModel<T>, r: T, tau: T) -> Result<T, KernelError> {
    check_lag(r)?;
    Ok(m.marginal_spatial(r) * m.marginal_temporal(tau) / m.variance())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Ldho,
    Ou,
}

/// JSON form of a [`KernelModel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub family: Family,
    pub dispersion: Dispersion,
    pub dim: usize,
    pub params: ParamSpec,
    #[serde(default)]
    pub nugget: f64,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub separable: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length_scales: Option<Vec<f64>>,
}

/// Hyperparameters by symbol name. Oscillator models accept `omega_d` with an
/// optional `regime` in place of `omega0`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma0_sq: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_d: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regime: Option<Regime>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b_or_xi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
}
