/// Stop after `tolerance` consecutive epochs without a strict improvement
/// in validation loss.
#[derive(Debug, Clone)]
pub struct EarlyStopping {
    tolerance: usize,
    best: f64,
    best_epoch: usize,
    since_best: usize,
}

impl EarlyStopping {
    pub fn new(tolerance: usize) -> Self {
        EarlyStopping {
            tolerance,
            best: f64::INFINITY,
            best_epoch: 0,
            since_best: 0,
        }
    }

    /// Record one epoch's validation loss; returns whether it improved.
    pub fn record(&mut self, epoch: usize, loss: f64) -> bool {
        if loss < self.best {
            self.best = loss;
            self.best_epoch = epoch;
            self.since_best = 0;
            true
        } else {
            self.since_best += 1;
            false
        }
    }

    pub fn should_stop(&self) -> bool {
        self.since_best >= self.tolerance
    }

    pub fn best_epoch(&self) -> usize {
        self.best_epoch
    }

    pub fn best_loss(&self) -> f64 {
        self.best
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stops_after_exactly_five_flat_epochs() {
        let mut es = EarlyStopping::new(5);
        let losses = [5.0, 4.0, 4.5, 4.6, 4.7, 4.8, 4.9];
        let mut stopped_after = None;
        for (i, &l) in losses.iter().enumerate() {
            let epoch = i + 1;
            es.record(epoch, l);
            if es.should_stop() {
                stopped_after = Some(epoch);
                break;
            }
        }
        assert_eq!(stopped_after, Some(7));
        assert_eq!(es.best_epoch(), 2);
        assert_eq!(es.best_loss(), 4.0);
    }

    #[test]
    fn strict_improvement_never_stops() {
        let mut es = EarlyStopping::new(5);
        for epoch in 1..=50 {
            es.record(epoch, 100.0 - epoch as f64);
            assert!(!es.should_stop());
        }
        assert_eq!(es.best_epoch(), 50);
    }

    #[test]
    fn equal_loss_does_not_count_as_improvement() {
        let mut es = EarlyStopping::new(2);
        es.record(1, 3.0);
        assert!(!es.record(2, 3.0));
        assert!(!es.record(3, 3.0));
        assert!(es.should_stop());
        assert_eq!(es.best_epoch(), 1);
    }
}
