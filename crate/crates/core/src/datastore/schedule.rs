use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Offline-to-online data proportion and temperature as functions of the
/// gradient step.
///
/// The offline fraction is 1 until `t_pure_offline`, falls linearly to
/// `final_offline_fraction` at `t_ramp_end` and stays there. The temperature
/// is `temperature_start` until `t_temp_start`, falls linearly to
/// `temperature_end` at `t_pure_offline` and stays there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AwacSchedule {
    pub t_temp_start: u64,
    pub t_pure_offline: u64,
    pub t_ramp_end: u64,
    pub final_offline_fraction: f64,
    pub temperature_start: f64,
    pub temperature_end: f64,
}

fn lerp(a: f64, b: f64, alpha: f64) -> f64 {
    (1.0 - alpha) * a + alpha * b
}

impl AwacSchedule {
    pub fn new(t_temp_start: u64, t_pure_offline: u64, t_ramp_end: u64) -> Result<Self> {
        if !(t_temp_start < t_pure_offline && t_pure_offline < t_ramp_end) {
            return Err(Error::InvalidArgument(format!(
                "schedule needs t_temp_start < t_pure_offline < t_ramp_end, got {t_temp_start}, {t_pure_offline}, {t_ramp_end}"
            )));
        }
        Ok(Self {
            t_temp_start,
            t_pure_offline,
            t_ramp_end,
            final_offline_fraction: 0.2,
            temperature_start: 1.0,
            temperature_end: 0.1,
        })
    }

    /// Offline-only for the first 45% of `total_steps`, temperature ramp over
    /// the last fifth of that phase, proportion ramp until the end.
    pub fn from_total_steps(total_steps: u64) -> Result<Self> {
        let t_pure_offline = (total_steps as f64 * 0.45).round() as u64;
        let t_temp_start = (t_pure_offline as f64 * 0.8).round() as u64;
        Self::new(t_temp_start, t_pure_offline, total_steps)
    }

    /// `(offline_fraction, temperature)` at gradient step `t`.
    pub fn at(&self, t: u64) -> (f64, f64) {
        let fraction = if t <= self.t_pure_offline {
            1.0
        } else if t >= self.t_ramp_end {
            self.final_offline_fraction
        } else {
            let alpha = (t - self.t_pure_offline) as f64 / (self.t_ramp_end - self.t_pure_offline) as f64;
            lerp(1.0, self.final_offline_fraction, alpha)
        };
        let temperature = if t <= self.t_temp_start {
            self.temperature_start
        } else if t >= self.t_pure_offline {
            self.temperature_end
        } else {
            let alpha = (t - self.t_temp_start) as f64 / (self.t_pure_offline - self.t_temp_start) as f64;
            lerp(self.temperature_start, self.temperature_end, alpha)
        };
        (fraction, temperature)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn anchors() {
        let s = AwacSchedule::new(400_000, 500_000, 1_100_000).unwrap();
        assert_eq!(s.at(0), (1.0, 1.0));
        assert_eq!(s.at(500_000), (1.0, 0.1));
        assert_eq!(s.at(800_000).0, 0.6);
        assert_eq!(s.at(2_000_000), (0.2, 0.1));
        assert_eq!(s.at(450_000).1, 0.55);
    }

    #[test]
    fn ordering_enforced() {
        assert!(AwacSchedule::new(5, 5, 10).is_err());
        assert!(AwacSchedule::new(1, 5, 4).is_err());
    }

    #[test]
    fn continuous_at_breakpoints() {
        let s = AwacSchedule::from_total_steps(10_000).unwrap();
        for t in [s.t_temp_start, s.t_pure_offline, s.t_ramp_end] {
            let (f0, e0) = s.at(t - 1);
            let (f1, e1) = s.at(t + 1);
            assert!((f0 - f1).abs() < 1e-3 && (e0 - e1).abs() < 1e-2);
        }
    }
}
