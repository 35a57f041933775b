//! Exterior saturations at the two ends of the domain.

use serde::{Deserialize, Serialize};

use super::SchemeError;

/// Saturation as a function of time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TimeProfile {
    Constant { value: f64 },
    /// `values[k]` on `[times[k], times[k+1])`, the last value thereafter.
    /// `times` starts at 0 and increases strictly.
    Piecewise { times: Vec<f64>, values: Vec<f64> },
}

impl TimeProfile {
    pub fn constant(value: f64) -> Self {
        TimeProfile::Constant { value }
    }

    pub fn validate(&self) -> Result<(), SchemeError> {
        let in_unit = |v: f64| (0.0..=1.0).contains(&v);
        match self {
            TimeProfile::Constant { value } => {
                if !in_unit(*value) {
                    return Err(SchemeError::validation(format!(
                        "boundary saturation {value} outside [0, 1]"
                    )));
                }
            }
            TimeProfile::Piecewise { times, values } => {
                if times.is_empty() || times.len() != values.len() {
                    return Err(SchemeError::validation(
                        "piecewise profile needs matching, nonempty times and values",
                    ));
                }
                if times[0] != 0.0 || times.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(SchemeError::validation(
                        "piecewise profile times must start at 0 and increase",
                    ));
                }
                if let Some(v) = values.iter().find(|v| !in_unit(**v)) {
                    return Err(SchemeError::validation(format!(
                        "boundary saturation {v} outside [0, 1]"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn value_at(&self, t: f64) -> f64 {
        match self {
            TimeProfile::Constant { value } => *value,
            TimeProfile::Piecewise { times, values } => {
                let k = times.partition_point(|&s| s <= t);
                values[k.saturating_sub(1)]
            }
        }
    }

    /// Exact mean over `[t0, t1]`.
    pub fn average(&self, t0: f64, t1: f64) -> f64 {
        match self {
            TimeProfile::Constant { value } => *value,
            TimeProfile::Piecewise { times, values } => {
                if t1 <= t0 {
                    return self.value_at(t0);
                }
                let mut acc = 0.0;
                for k in 0..times.len() {
                    let lo = times[k].max(t0);
                    let hi = times.get(k + 1).copied().unwrap_or(f64::INFINITY).min(t1);
                    if hi > lo {
                        acc += values[k] * (hi - lo);
                    }
                }
                (acc / (t1 - t0)).clamp(0.0, 1.0)
            }
        }
    }
}

/// Left (`u̲`) and right (`ū`) exterior saturations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryData {
    pub lower: TimeProfile,
    pub upper: TimeProfile,
}

impl BoundaryData {
    pub fn constant(lower: f64, upper: f64) -> Self {
        Self {
            lower: TimeProfile::constant(lower),
            upper: TimeProfile::constant(upper),
        }
    }

    pub fn validate(&self) -> Result<(), SchemeError> {
        self.lower.validate()?;
        self.upper.validate()
    }

    /// Step averages `(u̲ⁿ⁺¹, ūⁿ⁺¹)` over `[n·δt, (n+1)·δt]` for step
    /// index `n`.
    pub fn step_values(&self, n: usize, dt: f64) -> (f64, f64) {
        let (t0, t1) = (n as f64 * dt, (n + 1) as f64 * dt);
        (self.lower.average(t0, t1), self.upper.average(t0, t1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn piecewise_average_is_exact() {
        let p = TimeProfile::Piecewise {
            times: vec![0.0, 1.0, 2.5],
            values: vec![0.2, 0.6, 0.0],
        };
        p.validate().unwrap();
        assert_eq!(p.average(0.0, 1.0), 0.2);
        assert!((p.average(0.5, 1.5) - 0.4).abs() < 1e-15);
        assert!((p.average(2.0, 3.0) - 0.3).abs() < 1e-15);
        assert_eq!(p.value_at(10.0), 0.0);
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(TimeProfile::constant(1.5).validate().is_err());
        let p = TimeProfile::Piecewise {
            times: vec![0.5],
            values: vec![0.1],
        };
        assert!(p.validate().is_err());
    }
}
