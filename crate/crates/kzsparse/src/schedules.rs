//! Row-selection rules producing the index sequence one Kaczmarz epoch
//! consumes.
//!
//! `Reshuffle` draws a fresh uniform permutation for every epoch,
//! `ReshuffleOnce` draws one permutation and reuses it, `Cyclic` always
//! visits rows in natural order, and `WithReplacement` draws m i.i.d.
//! uniform indices. Schedules are derived from `(seed, epoch_index)`, so
//! any epoch can be regenerated without replaying the ones before it.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::seeds::{mix, rng_from};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleRule {
    Reshuffle,
    ReshuffleOnce,
    Cyclic,
    #[serde(rename = "replacement")]
    WithReplacement,
}

impl ScheduleRule {
    pub fn as_str(&self) -> &'static str {
        match self {
            ScheduleRule::Reshuffle => "reshuffle",
            ScheduleRule::ReshuffleOnce => "reshuffle-once",
            ScheduleRule::Cyclic => "cyclic",
            ScheduleRule::WithReplacement => "replacement",
        }
    }
}

impl std::str::FromStr for ScheduleRule {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "reshuffle" => Ok(ScheduleRule::Reshuffle),
            "reshuffle-once" => Ok(ScheduleRule::ReshuffleOnce),
            "cyclic" => Ok(ScheduleRule::Cyclic),
            "replacement" => Ok(ScheduleRule::WithReplacement),
            other => Err(format!(
                "unknown schedule rule '{}'; expected reshuffle | reshuffle-once | cyclic | replacement",
                other
            )),
        }
    }
}

impl std::fmt::Display for ScheduleRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The row order one epoch consumes. Indices are 0-based.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RowSchedule {
    order: Vec<usize>,
    rule: ScheduleRule,
}

impl RowSchedule {
    pub fn from_order(order: Vec<usize>, rule: ScheduleRule) -> Self {
        RowSchedule { order, rule }
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn rule(&self) -> ScheduleRule {
        self.rule
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }
}

/// Schedule for epoch `epoch_index`, deterministic in `(seed, epoch_index)`.
pub fn next_epoch_schedule(
    rule: ScheduleRule,
    m: usize,
    epoch_index: u64,
    seed: u64,
) -> RowSchedule {
    let order = match rule {
        ScheduleRule::Cyclic => (0..m).collect(),
        ScheduleRule::Reshuffle => {
            let mut rng = rng_from(mix(seed, epoch_index));
            let mut order: Vec<usize> = (0..m).collect();
            order.shuffle(&mut rng);
            order
        }
        ScheduleRule::ReshuffleOnce => {
            let mut rng = rng_from(mix(seed, 0));
            let mut order: Vec<usize> = (0..m).collect();
            order.shuffle(&mut rng);
            order
        }
        ScheduleRule::WithReplacement => {
            let mut rng = rng_from(mix(seed, epoch_index));
            (0..m).map(|_| rng.gen_range(0..m)).collect()
        }
    };
    RowSchedule { order, rule }
}

/// True iff the schedule satisfies its rule's invariant for `m` rows.
pub fn validate_schedule(schedule: &RowSchedule, m: usize) -> bool {
    if schedule.order.len() != m {
        return false;
    }
    match schedule.rule {
        ScheduleRule::WithReplacement => schedule.order.iter().all(|&i| i < m),
        ScheduleRule::Reshuffle | ScheduleRule::ReshuffleOnce | ScheduleRule::Cyclic => {
            let mut seen = vec![false; m];
            for &i in &schedule.order {
                if i >= m || seen[i] {
                    return false;
                }
                seen[i] = true;
            }
            true
        }
    }
}

/// Convenience handle bundling a rule, row count and seed.
#[derive(Clone, Copy, Debug)]
pub struct ScheduleStream {
    pub rule: ScheduleRule,
    pub m: usize,
    pub seed: u64,
}

impl ScheduleStream {
    pub fn new(rule: ScheduleRule, m: usize, seed: u64) -> Self {
        ScheduleStream { rule, m, seed }
    }

    pub fn epoch(&self, epoch_index: u64) -> RowSchedule {
        next_epoch_schedule(self.rule, self.m, epoch_index, self.seed)
    }
}
