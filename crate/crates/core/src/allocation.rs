//! Subcarrier allocation among untrusted users.
//!
//! A relay-user subcarrier can carry a positive secure rate only for the user
//! with the strongest gain on it; everyone else is an eavesdropper and the
//! strongest of them (the runner-up) bounds the leakage. Allocation therefore
//! depends on the relay-user gains alone, not on pairing or power.

use crate::channel::ChannelRealization;

/// Winner and equivalent eavesdropper on each relay-user subcarrier.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    /// Intended user per relay-user subcarrier `o`.
    pub user: Vec<usize>,
    /// Strongest non-intended user per subcarrier.
    pub eavesdropper: Vec<usize>,
    /// Winner's gain on `o`.
    pub gain_rm: Vec<f64>,
    /// Eavesdropper's gain on `o`.
    pub gain_re: Vec<f64>,
}

impl Assignment {
    pub fn len(&self) -> usize {
        self.user.len()
    }

    pub fn is_empty(&self) -> bool {
        self.user.is_empty()
    }

    /// Whether subcarrier `o` can support a positive secure rate.
    pub fn is_secure(&self, o: usize) -> bool {
        self.gain_rm[o] > self.gain_re[o]
    }
}

/// Gives every relay-user subcarrier to its max-gain user; ties go to the
/// lowest user index, in which case the eavesdropper has the same gain and the
/// subcarrier carries zero secure rate.
pub fn allocate(realization: &ChannelRealization) -> Assignment {
    let n = realization.num_subcarriers();
    let gains = realization.gain_ru();
    let mut out = Assignment {
        user: Vec::with_capacity(n),
        eavesdropper: Vec::with_capacity(n),
        gain_rm: Vec::with_capacity(n),
        gain_re: Vec::with_capacity(n),
    };
    for o in 0..n {
        let mut best = (0usize, gains[0][o]);
        let mut second: Option<(usize, f64)> = None;
        for (m, row) in gains.iter().enumerate().skip(1) {
            let g = row[o];
            if g > best.1 {
                second = Some(best);
                best = (m, g);
            } else if second.is_none_or(|(_, s)| g > s) {
                second = Some((m, g));
            }
        }
        // at least two users by construction of ChannelRealization
        let second = second.expect("two or more users");
        out.user.push(best.0);
        out.gain_rm.push(best.1);
        out.eavesdropper.push(second.0);
        out.gain_re.push(second.1);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{generate_realization, SystemConfig};

    #[test]
    fn two_user_argmax() {
        let r = ChannelRealization::new(vec![1.0], vec![vec![0.9], vec![0.4]], 1.0).unwrap();
        let a = allocate(&r);
        assert_eq!(a.user, vec![0]);
        assert_eq!(a.eavesdropper, vec![1]);
        assert_eq!(a.gain_rm, vec![0.9]);
        assert_eq!(a.gain_re, vec![0.4]);

        let r = ChannelRealization::new(vec![1.0], vec![vec![0.4], vec![0.9]], 1.0).unwrap();
        let a = allocate(&r);
        assert_eq!((a.user[0], a.eavesdropper[0]), (1, 0));
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let r = ChannelRealization::new(
            vec![1.0, 1.0],
            vec![vec![0.5, 0.1], vec![0.5, 0.7], vec![0.5, 0.7]],
            1.0,
        )
        .unwrap();
        let a = allocate(&r);
        assert_eq!((a.user[0], a.eavesdropper[0]), (0, 1));
        assert_eq!(a.gain_rm[0], a.gain_re[0]);
        assert!(!a.is_secure(0));
        assert_eq!((a.user[1], a.eavesdropper[1]), (1, 2));
        assert!(!a.is_secure(1));
    }

    #[test]
    fn matches_exhaustive_scan() {
        for seed in 0..50 {
            let r = generate_realization(&SystemConfig::desk(6, 4).with_seed(seed)).unwrap();
            let a = allocate(&r);
            for o in 0..6 {
                let col: Vec<f64> = r.gain_ru().iter().map(|row| row[o]).collect();
                let mut order: Vec<usize> = (0..col.len()).collect();
                order.sort_by(|&i, &j| col[j].total_cmp(&col[i]).then(i.cmp(&j)));
                assert_eq!(a.user[o], order[0]);
                assert_eq!(a.eavesdropper[o], order[1]);
                assert_ne!(a.user[o], a.eavesdropper[o]);
                assert!(a.gain_rm[o] >= a.gain_re[o]);
            }
        }
    }
}
