//! Two-level uniform random sampling and pseudonymous session identity.
//!
//! Level one enrolls a whole session with probability `p_session`; level two
//! picks individual keystroke analyses with probability `p_event`. Module
//! switches never consult the sampler: the client emits those directly.
//!
//! The generator is ChaCha8, split into two independent streams (identifier
//! draws and sampling coins) so session-id sequences stay stable when the
//! probabilities change.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::record::{SessionId, SESSION_ID_SPACE};

/// Sampling configuration. Defaults match the deployed rates: 1% of
/// sessions, 0.5% of analyses within an enrolled session.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub p_session: f64,
    pub p_event: f64,
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            p_session: 0.01,
            p_event: 0.005,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("sampling probability {value} for {name} is outside [0, 1]")]
pub struct BadProbability {
    pub name: &'static str,
    pub value: String,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Per-session sampler. Deterministic given the config seed.
#[derive(Debug, Clone)]
pub struct Sampler {
    p_session: f64,
    p_event: f64,
    id_rng: ChaCha8Rng,
    coin_rng: ChaCha8Rng,
}

impl Sampler {
    pub fn new(cfg: SamplerConfig) -> Result<Sampler, BadProbability> {
        for (name, value) in [("p_session", cfg.p_session), ("p_event", cfg.p_event)] {
            if !(0.0..=1.0).contains(&value) || value.is_nan() {
                return Err(BadProbability {
                    name,
                    value: value.to_string(),
                });
            }
        }
        Ok(Sampler {
            p_session: cfg.p_session,
            p_event: cfg.p_event,
            id_rng: ChaCha8Rng::seed_from_u64(splitmix64(cfg.seed)),
            coin_rng: ChaCha8Rng::seed_from_u64(splitmix64(cfg.seed ^ 0xA5A5_A5A5_A5A5_A5A5)),
        })
    }

    /// Decide enrollment and draw a session id. The id is drawn from its own
    /// stream regardless of the enrollment outcome.
    pub fn enroll_session(&mut self) -> (bool, SessionId) {
        let id = SessionId::new(self.id_rng.random_range(0..SESSION_ID_SPACE))
            .expect("drawn id is in range");
        let enrolled = self.coin_rng.random_bool(self.p_session);
        (enrolled, id)
    }

    /// One Bernoulli trial per keystroke analysis in an enrolled session.
    pub fn sample_event(&mut self) -> bool {
        self.coin_rng.random_bool(self.p_event)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extreme_probabilities_are_exact() {
        let mut always = Sampler::new(SamplerConfig {
            p_session: 1.0,
            p_event: 1.0,
            seed: 1,
        })
        .unwrap();
        let mut never = Sampler::new(SamplerConfig {
            p_session: 0.0,
            p_event: 0.0,
            seed: 1,
        })
        .unwrap();
        for _ in 0..100 {
            assert!(always.enroll_session().0);
            assert!(always.sample_event());
            assert!(!never.enroll_session().0);
            assert!(!never.sample_event());
        }
    }

    #[test]
    fn invalid_probability_is_rejected() {
        let err = Sampler::new(SamplerConfig {
            p_session: 1.5,
            p_event: 0.0,
            seed: 0,
        })
        .unwrap_err();
        assert_eq!(err.name, "p_session");
    }

    #[test]
    fn same_seed_same_decisions_and_ids() {
        let cfg = SamplerConfig {
            p_session: 0.4,
            p_event: 0.3,
            seed: 99,
        };
        let mut a = Sampler::new(cfg).unwrap();
        let mut b = Sampler::new(cfg).unwrap();
        assert_eq!(a.enroll_session(), b.enroll_session());
        for _ in 0..500 {
            assert_eq!(a.sample_event(), b.sample_event());
        }
    }

    #[test]
    fn ids_are_stable_across_probability_changes() {
        let ids =
            |p: f64| -> Vec<SessionId> {
                let mut ids = Vec::new();
                for seed in 0..50 {
                    let mut s = Sampler::new(SamplerConfig {
                        p_session: p,
                        p_event: 0.5,
                        seed,
                    })
                    .unwrap();
                    ids.push(s.enroll_session().1);
                }
                ids
            };
        assert_eq!(ids(0.01), ids(0.99));
    }

    #[test]
    fn leading_digit_of_ids_is_uniform() {
        // Chi-square over the first digit of 10^5 ids; df = 9, alpha = 0.001
        // critical value 27.877.
        let mut counts = [0u64; 10];
        for seed in 0..100_000u64 {
            let mut s = Sampler::new(SamplerConfig {
                seed,
                ..SamplerConfig::default()
            })
            .unwrap();
            let digits = s.enroll_session().1.to_string();
            let digit = (digits.as_bytes()[0] - b'0') as usize;
            counts[digit] += 1;
        }
        let expected = 100_000.0 / 10.0;
        let chi2: f64 = counts
            .iter()
            .map(|&c| {
                let d = c as f64 - expected;
                d * d / expected
            })
            .sum();
        assert!(chi2 < 27.877, "chi-square {chi2} rejects uniformity");
    }
}
