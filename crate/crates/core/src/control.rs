//! Feed-machine on/off decision with hysteresis.
//!
//! ```text
//!   activity:  --OFF--]act_off ....hold.... act_on[--ON--
//!   count:     ... count_max[--OFF (oversupply)-- (takes precedence)
//! ```

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlConfig {
    pub act_on: f64,
    pub act_off: f64,
    pub count_max: u64,
}

impl ControlConfig {
    pub fn new(act_on: f64, act_off: f64, count_max: u64) -> Result<Self> {
        let c = ControlConfig {
            act_on,
            act_off,
            count_max,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.act_on.is_finite() && self.act_off.is_finite()) {
            return Err(Error::Config("activity thresholds must be finite".into()));
        }
        if self.act_off > self.act_on {
            return Err(Error::Config(format!(
                "act_off ({}) must not exceed act_on ({})",
                self.act_off, self.act_on
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reason {
    Startup,
    ActivityLow,
    ActivityHigh,
    Oversupply,
    /// No activity channel: feeding follows the count cutoff alone.
    CountOnly,
}

impl Reason {
    pub fn as_str(self) -> &'static str {
        match self {
            Reason::Startup => "startup",
            Reason::ActivityLow => "activity_low",
            Reason::ActivityHigh => "activity_high",
            Reason::Oversupply => "oversupply",
            Reason::CountOnly => "count_only",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlState {
    pub feeding: bool,
    pub reason: Reason,
}

impl Default for ControlState {
    fn default() -> Self {
        ControlState {
            feeding: false,
            reason: Reason::Startup,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlDecision {
    pub frame: u64,
    pub feeding: bool,
    pub windowed_count: u64,
    pub windowed_activity: Option<f64>,
    pub reason: Reason,
}

/// Next feeding state. `windowed_activity = None` selects count-only mode.
pub fn control_decide(
    state: ControlState,
    windowed_count: u64,
    windowed_activity: Option<f64>,
    config: &ControlConfig,
) -> ControlState {
    let set = |feeding, reason| ControlState { feeding, reason };
    if windowed_count >= config.count_max {
        return set(false, Reason::Oversupply);
    }
    match windowed_activity {
        None => set(true, Reason::CountOnly),
        Some(a) if a <= config.act_off => set(false, Reason::ActivityLow),
        Some(a) if a >= config.act_on => set(true, Reason::ActivityHigh),
        Some(_) => state,
    }
}

/// Sequential controller owning its state.
#[derive(Debug, Clone)]
pub struct Controller {
    config: ControlConfig,
    state: ControlState,
}

impl Controller {
    pub fn new(config: ControlConfig) -> Result<Self> {
        config.validate()?;
        Ok(Controller {
            config,
            state: ControlState::default(),
        })
    }

    pub fn state(&self) -> ControlState {
        self.state
    }

    pub fn step(
        &mut self,
        frame: u64,
        windowed_count: u64,
        windowed_activity: Option<f64>,
    ) -> ControlDecision {
        self.state = control_decide(self.state, windowed_count, windowed_activity, &self.config);
        ControlDecision {
            frame,
            feeding: self.state.feeding,
            windowed_count,
            windowed_activity,
            reason: self.state.reason,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> ControlConfig {
        ControlConfig::new(0.5, 0.2, 10).unwrap()
    }

    #[test]
    fn turns_on_above_act_on() {
        let s = control_decide(ControlState::default(), 3, Some(0.6), &cfg());
        assert_eq!(
            s,
            ControlState {
                feeding: true,
                reason: Reason::ActivityHigh
            }
        );
    }

    #[test]
    fn holds_inside_dead_band() {
        let off = ControlState::default();
        assert_eq!(control_decide(off, 3, Some(0.3), &cfg()), off);
        let on = ControlState {
            feeding: true,
            reason: Reason::ActivityHigh,
        };
        assert_eq!(control_decide(on, 3, Some(0.3), &cfg()), on);
    }

    #[test]
    fn oversupply_wins() {
        let on = ControlState {
            feeding: true,
            reason: Reason::ActivityHigh,
        };
        let s = control_decide(on, 10, Some(0.9), &cfg());
        assert_eq!(
            s,
            ControlState {
                feeding: false,
                reason: Reason::Oversupply
            }
        );
    }

    #[test]
    fn low_activity_turns_off() {
        let on = ControlState {
            feeding: true,
            reason: Reason::ActivityHigh,
        };
        assert_eq!(
            control_decide(on, 0, Some(0.2), &cfg()).reason,
            Reason::ActivityLow
        );
    }

    #[test]
    fn count_only_mode() {
        let s = control_decide(ControlState::default(), 3, None, &cfg());
        assert_eq!(
            s,
            ControlState {
                feeding: true,
                reason: Reason::CountOnly
            }
        );
        assert!(!control_decide(s, 11, None, &cfg()).feeding);
    }

    #[test]
    fn rejects_inverted_thresholds() {
        assert!(ControlConfig::new(0.1, 0.2, 5).is_err());
        assert!(ControlConfig::new(f64::NAN, 0.2, 5).is_err());
        assert!(ControlConfig::new(0.2, 0.2, 0).is_ok());
    }

    #[test]
    fn controller_starts_off() {
        let mut c = Controller::new(cfg()).unwrap();
        assert_eq!(c.state(), ControlState::default());
        let d = c.step(0, 0, Some(0.3));
        assert!(!d.feeding);
        assert_eq!(d.reason, Reason::Startup);
    }
}
