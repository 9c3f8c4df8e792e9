//! Configuration: a JSON document, with command-line flags overriding fields.

use serde::{Deserialize, Serialize, Serializer};

use krsol::exact::{rational, Geometry, Rational};
use krsol::{Error, Result};

/// Rational scalar accepted as a JSON number or a string ("2", "5/2", "0.25").
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum NumOrStr {
    Num(f64),
    Str(String),
}

impl NumOrStr {
    pub fn as_text(&self) -> String {
        match self {
            // Shortest round-trip decimal, so 0.1 parses as 1/10.
            NumOrStr::Num(x) => format!("{x}"),
            NumOrStr::Str(s) => s.clone(),
        }
    }
}

impl Serialize for NumOrStr {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ser.serialize_str(&self.as_text())
    }
}

impl From<&str> for NumOrStr {
    fn from(s: &str) -> Self {
        NumOrStr::Str(s.to_owned())
    }
}

/// Parse "p/q", an integer, or a plain decimal into an exact rational.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let bad = |detail: &str| {
        Error::InvalidParameter(format!("cannot parse '{text}' as a rational: {detail}"))
    };
    let s = text.trim();
    if let Some((num, den)) = s.split_once('/') {
        let num: i64 = num.trim().parse().map_err(|_| bad("bad numerator"))?;
        let den: i64 = den.trim().parse().map_err(|_| bad("bad denominator"))?;
        if den == 0 {
            return Err(bad("zero denominator"));
        }
        return Ok(rational(num, den));
    }
    if let Some((int_part, frac_part)) = s.split_once('.') {
        let negative = int_part.starts_with('-');
        let whole: i64 = if int_part.is_empty() || int_part == "-" || int_part == "+" {
            0
        } else {
            int_part.parse().map_err(|_| bad("bad integer part"))?
        };
        if frac_part.is_empty() || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad("bad fractional part"));
        }
        if frac_part.len() > 15 {
            return Err(bad("too many decimal digits; use p/q form"));
        }
        let frac: i64 = frac_part.parse().map_err(|_| bad("bad fractional part"))?;
        let scale = 10i64.pow(frac_part.len() as u32);
        let num = whole
            .abs()
            .checked_mul(scale)
            .and_then(|v| v.checked_add(frac))
            .ok_or_else(|| bad("magnitude too large"))?;
        let num = if negative { -num } else { num };
        return Ok(rational(num, scale));
    }
    let v: i64 = s.parse().map_err(|_| bad("not an integer, p/q, or decimal"))?;
    Ok(rational(v, 1))
}

/// The full configuration document. Every field is optional here; each mode
/// checks for what it needs after flags are merged in.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub mode: Option<String>,
    pub d: Option<u32>,
    pub n: Option<u32>,
    pub tau: Option<NumOrStr>,
    pub eps: Option<NumOrStr>,
    pub compact: Option<bool>,
    pub mu: Option<f64>,
    pub mu_min: Option<f64>,
    pub mu_max: Option<f64>,
    pub steps: Option<usize>,
    pub phi_min: Option<f64>,
    pub phi_max: Option<f64>,
    pub grid_count: Option<usize>,
    pub anchor_phi: Option<f64>,
    pub out_report: Option<String>,
    pub out_table: Option<String>,
    pub seed: Option<u64>,
    pub a: Option<f64>,
    #[serde(rename = "A")]
    pub a_coef: Option<f64>,
    #[serde(rename = "B")]
    pub b_coef: Option<f64>,
    pub u_norm2: Option<f64>,
    pub xi_norm2: Option<f64>,
    pub tol_ode_residual: Option<f64>,
    pub tol_ode_oracle: Option<f64>,
}

impl FileConfig {
    pub fn from_json(text: &str) -> Result<FileConfig> {
        serde_json::from_str(text)
            .map_err(|e| Error::InvalidParameter(format!("config does not parse: {e}")))
    }

    /// Overlay `over` on `self`: any field the overlay sets wins.
    pub fn merged(mut self, over: FileConfig) -> FileConfig {
        macro_rules! take {
            ($($field:ident),*) => {
                $(if over.$field.is_some() { self.$field = over.$field; })*
            };
        }
        take!(
            mode, d, n, tau, eps, compact, mu, mu_min, mu_max, steps, phi_min, phi_max,
            grid_count, anchor_phi, out_report, out_table, seed, a, a_coef, b_coef, u_norm2,
            xi_norm2, tol_ode_residual, tol_ode_oracle
        );
        self
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }
}

/// Geometry plus run controls once the profile-bearing modes are validated.
#[derive(Debug, Clone)]
pub struct ProfileParams {
    pub geometry: Geometry,
    pub compact: bool,
    pub mu: Option<f64>,
    pub phi_min: Option<f64>,
    pub phi_max: Option<f64>,
    pub grid_count: Option<usize>,
    pub anchor_phi: Option<f64>,
    pub seed: u64,
    pub tol_ode_residual: Option<f64>,
    pub tol_ode_oracle: Option<f64>,
}

pub fn resolve_profile(cfg: &FileConfig) -> Result<ProfileParams> {
    let need = |name: &str| Error::InvalidParameter(format!("missing required field '{name}'"));
    let d = cfg.d.ok_or_else(|| need("d"))?;
    let n = cfg.n.ok_or_else(|| need("n"))?;
    let tau = parse_rational(&cfg.tau.as_ref().ok_or_else(|| need("tau"))?.as_text())?;
    let eps = parse_rational(&cfg.eps.as_ref().ok_or_else(|| need("eps"))?.as_text())?;
    let geometry = Geometry::new(d, n, tau, eps)?;
    Ok(ProfileParams {
        geometry,
        compact: cfg.compact.unwrap_or(false),
        mu: cfg.mu,
        phi_min: cfg.phi_min,
        phi_max: cfg.phi_max,
        grid_count: cfg.grid_count,
        anchor_phi: cfg.anchor_phi,
        seed: cfg.seed(),
        tol_ode_residual: cfg.tol_ode_residual,
        tol_ode_oracle: cfg.tol_ode_oracle,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct SweepParams {
    pub mu_min: f64,
    pub mu_max: f64,
    pub steps: usize,
}

pub fn resolve_sweep(cfg: &FileConfig) -> Result<SweepParams> {
    let need = |name: &str| Error::InvalidParameter(format!("missing required field '{name}'"));
    let mu_min = cfg.mu_min.ok_or_else(|| need("mu_min"))?;
    let mu_max = cfg.mu_max.ok_or_else(|| need("mu_max"))?;
    let steps = cfg.steps.ok_or_else(|| need("steps"))?;
    if !(mu_min.is_finite() && mu_max.is_finite()) || steps == 0 {
        return Err(Error::InvalidParameter(
            "sweep needs finite mu_min <= mu_max and steps >= 1".into(),
        ));
    }
    let (mu_min, mu_max) = if mu_min <= mu_max {
        (mu_min, mu_max)
    } else {
        (mu_max, mu_min)
    };
    if mu_max >= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "sweep range must stay strictly negative, got top {mu_max}"
        )));
    }
    Ok(SweepParams {
        mu_min,
        mu_max,
        steps,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct QuotientParams {
    pub a: f64,
    pub a_coef: f64,
    pub b_coef: f64,
}

pub fn resolve_quotient(cfg: &FileConfig) -> Result<QuotientParams> {
    let a = cfg.a.ok_or_else(|| {
        Error::InvalidParameter("missing required field 'a' (momentum level)".into())
    })?;
    let a_coef = match (cfg.a_coef, cfg.u_norm2) {
        (Some(_), Some(_)) => {
            return Err(Error::InvalidParameter(
                "give either A or u_norm2, not both".into(),
            ))
        }
        (Some(v), None) => v,
        (None, Some(u)) if u >= 0.0 => 1.0 + u,
        (None, Some(u)) => {
            return Err(Error::InvalidParameter(format!(
                "u_norm2 must be nonnegative, got {u}"
            )))
        }
        (None, None) => {
            return Err(Error::InvalidParameter(
                "missing base factor: give A or u_norm2".into(),
            ))
        }
    };
    let b_coef = match (cfg.b_coef, cfg.xi_norm2) {
        (Some(_), Some(_)) => {
            return Err(Error::InvalidParameter(
                "give either B or xi_norm2, not both".into(),
            ))
        }
        (Some(v), None) => v,
        (None, Some(x)) if x >= 0.0 => x,
        (None, Some(x)) => {
            return Err(Error::InvalidParameter(format!(
                "xi_norm2 must be nonnegative, got {x}"
            )))
        }
        (None, None) => {
            return Err(Error::InvalidParameter(
                "missing fiber factor: give B or xi_norm2".into(),
            ))
        }
    };
    Ok(QuotientParams { a, a_coef, b_coef })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_forms() {
        assert_eq!(parse_rational("5/2").unwrap(), rational(5, 2));
        assert_eq!(parse_rational("-3").unwrap(), rational(-3, 1));
        assert_eq!(parse_rational("0.25").unwrap(), rational(1, 4));
        assert_eq!(parse_rational("-2.5").unwrap(), rational(-5, 2));
        assert_eq!(parse_rational(" 1 / 3 ").unwrap(), rational(1, 3));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("x").is_err());
        assert!(parse_rational("1.e5").is_err());
    }

    #[test]
    fn json_number_goes_through_decimal_text() {
        let cfg = FileConfig::from_json(r#"{"tau": 0.1}"#).unwrap();
        let tau = parse_rational(&cfg.tau.unwrap().as_text()).unwrap();
        assert_eq!(tau, rational(1, 10));
    }

    #[test]
    fn merge_prefers_overlay() {
        let base = FileConfig::from_json(r#"{"d": 1, "n": 1, "seed": 7}"#).unwrap();
        let over = FileConfig {
            n: Some(2),
            ..FileConfig::default()
        };
        let merged = base.merged(over);
        assert_eq!(merged.d, Some(1));
        assert_eq!(merged.n, Some(2));
        assert_eq!(merged.seed(), 7);
    }

    #[test]
    fn unknown_field_rejected() {
        assert!(FileConfig::from_json(r#"{"dd": 1}"#).is_err());
    }

    #[test]
    fn quotient_norm_wrappers() {
        let cfg = FileConfig::from_json(r#"{"a": 1.0, "u_norm2": 3.0, "xi_norm2": 2.0}"#).unwrap();
        let q = resolve_quotient(&cfg).unwrap();
        assert_eq!(q.a_coef, 4.0);
        assert_eq!(q.b_coef, 2.0);
        let both = FileConfig::from_json(r#"{"a": 0.0, "A": 1.0, "u_norm2": 0.0, "B": 1.0}"#).unwrap();
        assert!(resolve_quotient(&both).is_err());
    }

    #[test]
    fn sweep_rejects_nonnegative_range() {
        let cfg = FileConfig::from_json(r#"{"mu_min": -2.0, "mu_max": 0.5, "steps": 4}"#).unwrap();
        assert!(resolve_sweep(&cfg).is_err());
    }
}
