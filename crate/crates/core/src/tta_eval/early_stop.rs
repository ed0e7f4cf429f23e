pub const DEFAULT_PATIENCE: u32 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Continue,
    Stop,
}

/// Patience-based monitor over a per-epoch validation AUC.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EarlyStopState {
    pub best_auc: f64,
    /// 1-based epoch of `best_auc`; 0 before the first step.
    pub best_epoch: u32,
    pub epochs_since_improve: u32,
    pub epochs_seen: u32,
    pub patience: u32,
    /// An epoch improves only if it beats `best_auc + min_delta`.
    pub min_delta: f64,
}

impl EarlyStopState {
    pub fn new(patience: u32) -> Self {
        Self {
            best_auc: f64::NEG_INFINITY,
            best_epoch: 0,
            epochs_since_improve: 0,
            epochs_seen: 0,
            patience,
            min_delta: 0.0,
        }
    }

    pub fn step(&mut self, epoch_auc: f64) -> Decision {
        let (next, decision) = early_stop_step(*self, epoch_auc);
        *self = next;
        decision
    }
}

impl Default for EarlyStopState {
    fn default() -> Self {
        Self::new(DEFAULT_PATIENCE)
    }
}

/// A strict improvement resets the counter; otherwise it grows, and the
/// monitor stops on the non-improving epoch that brings it to `patience`.
pub fn early_stop_step(mut state: EarlyStopState, epoch_auc: f64) -> (EarlyStopState, Decision) {
    state.epochs_seen += 1;
    if epoch_auc > state.best_auc + state.min_delta {
        state.best_auc = epoch_auc;
        state.best_epoch = state.epochs_seen;
        state.epochs_since_improve = 0;
        return (state, Decision::Continue);
    }
    state.epochs_since_improve += 1;
    let decision = if state.epochs_since_improve >= state.patience {
        Decision::Stop
    } else {
        Decision::Continue
    };
    (state, decision)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Returns the 1-based epoch at which the monitor stopped.
    fn run(seq: &[f64], patience: u32) -> (Option<u32>, EarlyStopState) {
        let mut s = EarlyStopState::new(patience);
        for &auc in seq {
            if s.step(auc) == Decision::Stop {
                return (Some(s.epochs_seen), s);
            }
        }
        (None, s)
    }

    #[test]
    fn plateau_after_two_epochs() {
        let mut seq = vec![0.5, 0.6];
        seq.extend([0.6, 0.55, 0.58, 0.6, 0.4, 0.59, 0.6, 0.51]);
        seq.push(0.99);
        let (stop, s) = run(&seq, 8);
        assert_eq!(stop, Some(10));
        assert_eq!(s.best_epoch, 2);
        assert_eq!(s.best_auc, 0.6);
    }

    #[test]
    fn increasing_never_stops() {
        let seq: Vec<f64> = (0..100).map(|i| i as f64 / 100.0).collect();
        assert_eq!(run(&seq, 8).0, None);
    }

    #[test]
    fn constant_stops_after_patience_plus_one() {
        for p in [1, 3, 8] {
            assert_eq!(run(&[0.7; 50], p).0, Some(p + 1));
        }
    }

    #[test]
    fn zero_patience() {
        assert_eq!(run(&[0.5, 0.6, 0.6], 0).0, Some(3));
    }

    #[test]
    fn late_improvement_resets() {
        let mut seq = vec![0.5];
        seq.extend([0.4; 7]);
        seq.push(0.51);
        seq.extend([0.4; 7]);
        assert_eq!(run(&seq, 8).0, None);
        seq.push(0.4);
        let (stop, s) = run(&seq, 8);
        assert_eq!(stop, Some(17));
        assert_eq!(s.best_epoch, 9);
    }
}
