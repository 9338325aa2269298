//! AQMRD: RED-style early dropping driven by both the average queue size
//! and its rate of change.
//!
//! `avg` and `davg` advance on the sample clock ([`AqmrdState::update_ewma`]);
//! arrivals only read them. While `avg` sits inside `[min_th, max_th)` every
//! arrival nudges the adaptive `mid_th` one packet against the sign of
//! `davg`. A growing queue (`davg > 0`) is ramped against the narrower
//! `[min_th, mid_th)` band, a steady or shrinking one against the full
//! `[min_th, max_th)` band.

use super::{
    counted_trial, effective_drop_prob, AboveMidMode, Arrival, Discipline, DisciplineKind,
    GatewayParams, Probe, Verdict,
};
use crate::error::{Error, Result};

/// Initial adaptive threshold, `min(x * min_th, max_th)`.
pub fn init_mid_th(params: &GatewayParams) -> Result<f64> {
    if !(1.0..=3.0).contains(&params.x) {
        return Err(Error::config(
            "x_factor",
            format!("{} not in [1, 3]", params.x),
        ));
    }
    Ok((params.x * params.min_th).min(params.max_th))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AqmrdState {
    pub avg: f64,
    /// EWMA of per-tick queue increments, packets per sample interval.
    pub davg: f64,
    pub q_prev: f64,
    pub mid_th: f64,
    /// In-band arrivals admitted since the last early drop; -1 outside the band.
    pub count: i64,
}

impl AqmrdState {
    pub fn new(params: &GatewayParams) -> Result<Self> {
        Ok(AqmrdState {
            avg: 0.0,
            davg: 0.0,
            q_prev: 0.0,
            mid_th: init_mid_th(params)?,
            count: -1,
        })
    }

    /// One sample-clock step of both moving averages.
    pub fn update_ewma(self, q: f64, params: &GatewayParams) -> Self {
        let w = params.w_q;
        AqmrdState {
            avg: (1.0 - w) * self.avg + w * q,
            davg: (1.0 - w) * self.davg + w * (q - self.q_prev),
            q_prev: q,
            ..self
        }
    }

    /// Steps `mid_th` up when the queue is shrinking, down when growing.
    pub fn adapt_mid_th(self, params: &GatewayParams) -> Self {
        let step = if self.davg < 0.0 {
            1.0
        } else if self.davg > 0.0 {
            -1.0
        } else {
            0.0
        };
        AqmrdState {
            mid_th: (self.mid_th + step).clamp(params.min_th, params.max_th),
            ..self
        }
    }

    /// Base drop probability `p_b` for the current `avg`, `davg` and `mid_th`.
    pub fn base_drop_prob(&self, params: &GatewayParams) -> f64 {
        let (min_th, max_th, max_p) = (params.min_th, params.max_th, params.max_p);
        let avg = self.avg;
        if avg < min_th {
            return 0.0;
        }
        let full_ramp = |avg: f64| {
            if avg < max_th {
                max_p * (avg - min_th) / (max_th - min_th)
            } else {
                1.0
            }
        };
        let p = if self.davg > 0.0 {
            if avg < self.mid_th {
                let span = self.mid_th - min_th;
                if span > 0.0 {
                    max_p * (avg - min_th) / span
                } else {
                    max_p
                }
            } else {
                match params.above_mid_mode {
                    AboveMidMode::UnitProb => 1.0,
                    AboveMidMode::P2Fallback => full_ramp(avg),
                }
            }
        } else {
            full_ramp(avg)
        };
        p.clamp(0.0, 1.0)
    }

    /// Per-arrival decision. The EWMA state is read, never advanced, here.
    pub fn on_arrival(self, q: usize, u: f64, params: &GatewayParams) -> (Verdict, Self) {
        let mut next = self;
        let verdict = if self.avg < params.min_th {
            next.count = -1;
            Verdict::ENQUEUE
        } else if self.avg < params.max_th {
            next = next.adapt_mid_th(params);
            let p_b = next.base_drop_prob(params);
            counted_trial(p_b, &mut next.count, u)
        } else {
            next.count = -1;
            Verdict::early_drop(1.0)
        };
        (verdict.with_overflow(q >= params.buffer_capacity), next)
    }

    /// Count-corrected probability the next in-band arrival would face.
    pub fn effective_prob(&self, params: &GatewayParams) -> f64 {
        effective_drop_prob(self.base_drop_prob(params), self.count)
    }
}

#[derive(Debug, Clone)]
pub struct Aqmrd {
    params: GatewayParams,
    state: AqmrdState,
}

impl Aqmrd {
    pub fn new(params: GatewayParams) -> Result<Self> {
        params.validate()?;
        Ok(Aqmrd {
            state: AqmrdState::new(&params)?,
            params,
        })
    }

    pub fn state(&self) -> &AqmrdState {
        &self.state
    }

    pub fn state_mut(&mut self) -> &mut AqmrdState {
        &mut self.state
    }
}

impl Discipline for Aqmrd {
    fn kind(&self) -> DisciplineKind {
        DisciplineKind::Aqmrd
    }

    fn on_arrival(&mut self, arrival: &Arrival) -> Verdict {
        let (v, next) = self.state.on_arrival(arrival.q, arrival.u, &self.params);
        self.state = next;
        v
    }

    fn on_sample(&mut self, q: usize, _now: f64) {
        self.state = self.state.update_ewma(q as f64, &self.params);
    }

    fn probe(&self) -> Probe {
        Probe {
            avg: Some(self.state.avg),
            davg: Some(self.state.davg),
            mid_th: Some(self.state.mid_th),
            p: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * b.abs().max(1e-300)
    }

    fn state(avg: f64, davg: f64, mid_th: f64) -> AqmrdState {
        AqmrdState {
            avg,
            davg,
            q_prev: 0.0,
            mid_th,
            count: -1,
        }
    }

    #[test]
    fn ewma_examples() {
        let p = GatewayParams::default();
        let s = AqmrdState {
            q_prev: 10.0,
            ..state(10.0, 0.0, 32.0)
        };
        let fixed = s.update_ewma(10.0, &p);
        assert_eq!((fixed.avg, fixed.davg), (10.0, 0.0));

        let stepped = s.update_ewma(20.0, &p);
        assert!(close(stepped.avg, 10.02), "{}", stepped.avg);
        assert!(close(stepped.davg, 0.02), "{}", stepped.davg);
        assert_eq!(stepped.q_prev, 20.0);

        let p1 = GatewayParams { w_q: 1.0, ..p };
        let s = AqmrdState {
            q_prev: 3.0,
            ..state(123.0, -5.0, 32.0)
        };
        let s = s.update_ewma(7.0, &p1);
        assert_eq!((s.avg, s.davg), (7.0, 4.0));
    }

    #[test]
    fn mid_th_steps_and_clamps() {
        let p = GatewayParams::default();
        assert_eq!(state(20.0, -0.5, 30.0).adapt_mid_th(&p).mid_th, 31.0);
        assert_eq!(state(20.0, 0.5, 30.0).adapt_mid_th(&p).mid_th, 29.0);
        assert_eq!(state(20.0, 0.0, 30.0).adapt_mid_th(&p).mid_th, 30.0);
        assert_eq!(state(20.0, 0.5, 16.0).adapt_mid_th(&p).mid_th, 16.0);
        assert_eq!(state(20.0, -0.5, 48.0).adapt_mid_th(&p).mid_th, 48.0);
    }

    #[test]
    fn init_mid_th_examples() {
        let p = |x| GatewayParams {
            x,
            ..GatewayParams::default()
        };
        assert_eq!(init_mid_th(&p(2.0)).unwrap(), 32.0);
        assert_eq!(init_mid_th(&p(1.0)).unwrap(), 16.0);
        assert_eq!(init_mid_th(&p(3.0)).unwrap(), 48.0);
        let narrow = GatewayParams {
            x: 3.0,
            max_th: 40.0,
            ..GatewayParams::default()
        };
        assert_eq!(init_mid_th(&narrow).unwrap(), 40.0);
        assert!(init_mid_th(&p(0.5)).is_err());
        assert!(init_mid_th(&p(3.01)).is_err());
    }

    #[test]
    fn base_prob_examples() {
        let p = GatewayParams::default();
        assert!(close(state(20.0, 1.0, 32.0).base_drop_prob(&p), 0.025));
        assert!(close(state(32.0, 0.0, 32.0).base_drop_prob(&p), 0.05));
        assert!(close(state(32.0, -1.0, 40.0).base_drop_prob(&p), 0.05));
        for davg in [-1.0, 0.0, 1.0] {
            assert_eq!(state(10.0, davg, 32.0).base_drop_prob(&p), 0.0);
        }
        assert_eq!(state(48.0, -1.0, 32.0).base_drop_prob(&p), 1.0);
        assert_eq!(state(48.0, 0.0, 32.0).base_drop_prob(&p), 1.0);
    }

    #[test]
    fn above_mid_modes() {
        let unit = GatewayParams::default();
        let p2 = GatewayParams {
            above_mid_mode: AboveMidMode::P2Fallback,
            ..unit
        };
        let s = state(40.0, 0.5, 32.0);
        assert_eq!(s.base_drop_prob(&unit), 1.0);
        assert!(close(s.base_drop_prob(&p2), 0.1 * 24.0 / 32.0));
        assert_eq!(state(50.0, 0.5, 32.0).base_drop_prob(&p2), 1.0);
    }

    #[test]
    fn degenerate_mid_th_never_divides_by_zero() {
        let p = GatewayParams {
            above_mid_mode: AboveMidMode::P2Fallback,
            ..Default::default()
        };
        let mut s = state(16.0, 0.5, 16.0);
        assert!(close(s.base_drop_prob(&p), 0.0));
        s.avg = 20.0;
        assert!(close(s.base_drop_prob(&p), 0.1 * 4.0 / 32.0));
        let unit = GatewayParams::default();
        assert_eq!(s.base_drop_prob(&unit), 1.0);
    }

    #[test]
    fn arrival_examples() {
        let p = GatewayParams::default();
        let (v, s) = state(10.0, 0.0, 32.0).on_arrival(8, 0.0, &p);
        assert_eq!(v, Verdict::ENQUEUE);
        assert_eq!(s.count, -1);

        let mut hot = state(50.0, 0.0, 32.0);
        hot.count = 7;
        let (v, s) = hot.on_arrival(30, 0.99, &p);
        assert!(v.is_early_drop());
        assert_eq!(v.p_applied, 1.0);
        assert_eq!(s.count, -1);

        let (v, _) = state(10.0, 0.0, 32.0).on_arrival(64, 0.5, &p);
        assert_eq!(v, Verdict::OVERFLOW);
    }

    #[test]
    fn in_band_arrival_adapts_then_draws() {
        let p = GatewayParams::default();
        // davg > 0: mid_th 33 -> 32, then p_1 = 0.1 * 4/16.
        let (v, s) = state(20.0, 0.1, 33.0).on_arrival(20, 0.5, &p);
        assert_eq!(s.mid_th, 32.0);
        assert!(close(v.p_applied, 0.025));
        assert!(!v.is_drop());
        assert_eq!(s.count, 0);
        let (v, s) = s.on_arrival(20, 0.0, &p);
        assert!(v.is_early_drop());
        assert_eq!(s.count, 0);
        assert_eq!(s.mid_th, 31.0);
    }

    fn arb_params() -> impl Strategy<Value = GatewayParams> {
        (
            1.0f64..30.0,
            1.0f64..40.0,
            0.001f64..1.0,
            0.001f64..1.0,
            1.0f64..=3.0,
            any::<bool>(),
        )
            .prop_map(|(min_th, gap, w_q, max_p, x, mode)| GatewayParams {
                w_q,
                max_p,
                min_th,
                max_th: min_th + gap,
                buffer_capacity: (min_th + gap).ceil() as usize + 16,
                x,
                sample_interval: 0.01,
                above_mid_mode: if mode {
                    AboveMidMode::UnitProb
                } else {
                    AboveMidMode::P2Fallback
                },
            })
    }

    proptest! {
        #[test]
        fn mid_th_stays_in_band(
            params in arb_params(),
            steps in prop::collection::vec((0usize..90, 0.0f64..1.0, any::<bool>()), 1..400),
        ) {
            let mut s = AqmrdState::new(&params).unwrap();
            for (q, u, tick) in steps {
                if tick {
                    s = s.update_ewma(q as f64, &params);
                } else {
                    let (v, next) = s.on_arrival(q, u, &params);
                    prop_assert!((0.0..=1.0).contains(&v.p_applied));
                    s = next;
                }
                prop_assert!(s.mid_th >= params.min_th && s.mid_th <= params.max_th);
                prop_assert!(s.count >= -1);
                prop_assert!(s.avg >= 0.0);
            }
        }

        #[test]
        fn base_prob_monotone_in_avg(
            params in arb_params(),
            a in 0.0f64..100.0,
            b in 0.0f64..100.0,
            mid_frac in 0.0f64..=1.0,
            davg in -2.0f64..2.0,
        ) {
            let mid_th = params.min_th + mid_frac * (params.max_th - params.min_th);
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let plo = state(lo, davg, mid_th).base_drop_prob(&params);
            let phi = state(hi, davg, mid_th).base_drop_prob(&params);
            prop_assert!((0.0..=1.0).contains(&plo) && (0.0..=1.0).contains(&phi));
            prop_assert!(plo <= phi, "p({lo})={plo} > p({hi})={phi}");
        }

        #[test]
        fn growing_queue_is_more_aggressive(
            params in arb_params(),
            avg_frac in 0.0f64..1.0,
            mid_frac in 0.0f64..=1.0,
        ) {
            let mid_th = params.min_th + mid_frac * (params.max_th - params.min_th);
            let avg = params.min_th + avg_frac * (mid_th - params.min_th);
            prop_assume!(avg < mid_th);
            let p1 = state(avg, 0.5, mid_th).base_drop_prob(&params);
            let p2 = state(avg, -0.5, mid_th).base_drop_prob(&params);
            prop_assert!(p1 >= p2);
        }

        #[test]
        fn ewma_converges_geometrically(c in 0.0f64..64.0, start in 0.0f64..64.0, w_q in 0.001f64..0.5) {
            let params = GatewayParams { w_q, ..GatewayParams::default() };
            let mut s = AqmrdState { avg: start, davg: 0.0, q_prev: c, mid_th: 32.0, count: -1 };
            let mut err = (s.avg - c).abs();
            for _ in 0..50 {
                s = s.update_ewma(c, &params);
                let e = (s.avg - c).abs();
                prop_assert!(e <= err * (1.0 - w_q) + 1e-9);
                prop_assert_eq!(s.davg, 0.0);
                err = e;
            }
        }
    }
}
