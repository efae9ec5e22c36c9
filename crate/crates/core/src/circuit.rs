//! Resultant-resistance algebra, Johnson-Nyquist conversions and the
//! instantaneous solution of the two-resistor wire loop.
//!
//! The wire is ideal (no resistance, capacitance or inductance), so the loop
//! reduces to Alice's source in series with her resistor, Bob's source in
//! series with his, and at most one attacker element at the wire.
//!
//! Sign conventions:
//! * `i_wire` is positive when current flows from Alice toward Bob.
//! * An injected current `i_inj` flows *into* the wire node.
//! * An inserted voltage `u_ins` is oriented so that it drives current from
//!   Alice toward Bob.

use crate::error::{Error, Result};

/// Boltzmann constant in J/K (exact SI value).
pub const BOLTZMANN_K: f64 = 1.380649e-23;

/// A strictly positive, finite resistance in ohms.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Resistance(f64);

impl Resistance {
    pub fn new(ohms: f64) -> Result<Self> {
        check_resistance("resistance", ohms)?;
        Ok(Self(ohms))
    }

    pub fn ohms(self) -> f64 {
        self.0
    }
}

pub(crate) fn check_resistance(name: &str, ohms: f64) -> Result<()> {
    if ohms.is_finite() && ohms > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be positive and finite, got {ohms}")))
    }
}

fn check_positive(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "{name} must be positive and finite, got {value}"
        )))
    }
}

fn check_non_negative(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "{name} must be non-negative and finite, got {value}"
        )))
    }
}

/// Parallel combination `a·b/(a+b)`.
pub fn parallel_resultant(r_a: f64, r_b: f64) -> Result<f64> {
    check_resistance("r_a", r_a)?;
    check_resistance("r_b", r_b)?;
    Ok(r_a * r_b / (r_a + r_b))
}

/// Series combination `a+b`.
pub fn serial_resultant(r_a: f64, r_b: f64) -> Result<f64> {
    check_resistance("r_a", r_a)?;
    check_resistance("r_b", r_b)?;
    Ok(r_a + r_b)
}

/// Mean-square Johnson-Nyquist voltage `4kTRB` in V².
pub fn johnson_msv(temp: f64, r: f64, bandwidth: f64) -> Result<f64> {
    check_non_negative("temperature", temp)?;
    check_resistance("resistance", r)?;
    check_positive("bandwidth", bandwidth)?;
    Ok(4.0 * BOLTZMANN_K * temp * r * bandwidth)
}

/// Noise temperature that a resistor `r` needs to produce `msv` over `bandwidth`.
pub fn temp_from_msv(msv: f64, r: f64, bandwidth: f64) -> Result<f64> {
    check_non_negative("mean-square voltage", msv)?;
    check_resistance("resistance", r)?;
    check_positive("bandwidth", bandwidth)?;
    Ok(msv / (4.0 * BOLTZMANN_K * r * bandwidth))
}

/// The attacker element present in the loop, if any.
///
/// Modelled as an enum so that at most one attacker source can be active.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum AttackerSource {
    #[default]
    None,
    /// Current in amperes injected into the wire node.
    CurrentInjection(f64),
    /// Voltage in volts inserted in series with the wire.
    VoltageInsertion(f64),
}

/// Instantaneous state of the loop: both party sources, both connected
/// resistors and the attacker element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoopSnapshot {
    pub u_alice_src: f64,
    pub u_bob_src: f64,
    pub r_alice: f64,
    pub r_bob: f64,
    pub attacker: AttackerSource,
}

impl LoopSnapshot {
    pub fn i_inj(&self) -> f64 {
        match self.attacker {
            AttackerSource::CurrentInjection(i) => i,
            _ => 0.0,
        }
    }

    pub fn u_ins(&self) -> f64 {
        match self.attacker {
            AttackerSource::VoltageInsertion(u) => u,
            _ => 0.0,
        }
    }
}

/// Electrical quantities at one instant.
///
/// `i_alice_end` is the current leaving Alice's resistor toward the wire,
/// `i_bob_end` the current arriving at Bob's resistor from the wire.
/// `u_alice_end` and `u_bob_end` are the wire-to-ground voltages at the two
/// ends. When an attacker splits the wire, `u_wire` and `i_wire` are the
/// values on Alice's side of the attack point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoopSolution {
    pub u_wire: f64,
    pub i_wire: f64,
    pub i_alice_end: f64,
    pub i_bob_end: f64,
    pub u_alice_end: f64,
    pub u_bob_end: f64,
}

/// Solve the loop at one instant.
///
/// The attacker's contribution is added to the unattacked solution, so with
/// no attacker both end currents and both end voltages are bit-identical.
/// Under current injection `i_bob_end - i_alice_end = i_inj` (Kirchhoff's
/// current law at the node); under voltage insertion
/// `u_bob_end - u_alice_end = u_ins`.
pub fn solve_loop(s: &LoopSnapshot) -> LoopSolution {
    let r_s = s.r_alice + s.r_bob;
    let u0 = (s.u_alice_src * s.r_bob + s.u_bob_src * s.r_alice) / r_s;
    let i0 = (s.u_alice_src - s.u_bob_src) / r_s;

    match s.attacker {
        AttackerSource::None => LoopSolution {
            u_wire: u0,
            i_wire: i0,
            i_alice_end: i0,
            i_bob_end: i0,
            u_alice_end: u0,
            u_bob_end: u0,
        },
        AttackerSource::CurrentInjection(i_inj) => {
            let u = u0 + i_inj * (s.r_alice * s.r_bob / r_s);
            let i_alice = i0 - i_inj * (s.r_bob / r_s);
            LoopSolution {
                u_wire: u,
                i_wire: i_alice,
                i_alice_end: i_alice,
                i_bob_end: i0 + i_inj * (s.r_alice / r_s),
                u_alice_end: u,
                u_bob_end: u,
            }
        }
        AttackerSource::VoltageInsertion(u_ins) => {
            let i = i0 + u_ins / r_s;
            let u_alice = u0 - u_ins * (s.r_alice / r_s);
            LoopSolution {
                u_wire: u_alice,
                i_wire: i,
                i_alice_end: i,
                i_bob_end: i,
                u_alice_end: u_alice,
                u_bob_end: u0 + u_ins * (s.r_bob / r_s),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        let scale = a.abs().max(b.abs());
        if scale == 0.0 {
            0.0
        } else {
            (a - b).abs() / scale
        }
    }

    #[test]
    fn resultants_match_table_values() {
        let p = parallel_resultant(1000.0, 160.0).unwrap();
        assert!((p - 137.931).abs() < 1e-3, "{p}");
        let p = parallel_resultant(200.0, 444.44).unwrap();
        assert!((p - 137.93).abs() < 1e-2, "{p}");
        assert_eq!(parallel_resultant(50.0, 50.0).unwrap(), 25.0);

        assert_eq!(serial_resultant(2000.0, 2200.0).unwrap(), 4200.0);
        assert_eq!(serial_resultant(500.0, 2500.0).unwrap(), 3000.0);
        assert_eq!(serial_resultant(70.0, 70.0).unwrap(), 140.0);
    }

    #[test]
    fn bad_resistances_are_rejected() {
        for bad in [0.0, -1.0, f64::NAN, f64::INFINITY] {
            assert!(matches!(parallel_resultant(bad, 1.0), Err(Error::Domain(_))));
            assert!(matches!(serial_resultant(1.0, bad), Err(Error::Domain(_))));
            assert!(Resistance::new(bad).is_err());
        }
        assert_eq!(Resistance::new(5.0).unwrap().ohms(), 5.0);
    }

    #[test]
    fn johnson_conversions() {
        let msv = johnson_msv(1.81e16, 1000.0, 1000.0).unwrap();
        assert!((msv - 1.0).abs() < 1e-3, "{msv}");
        let msv = johnson_msv(9.06e16, 200.0, 1000.0).unwrap();
        assert!((msv - 1.0).abs() < 1e-3, "{msv}");
        assert_eq!(johnson_msv(0.0, 123.0, 456.0).unwrap(), 0.0);

        let t = temp_from_msv(1.0, 1000.0, 1000.0).unwrap();
        assert!((t / 1.811e16 - 1.0).abs() < 1e-3, "{t}");
        let t = temp_from_msv(1.0, 200.0, 1000.0).unwrap();
        assert!((t / 9.06e16 - 1.0).abs() < 1e-3, "{t}");
        assert_eq!(temp_from_msv(0.0, 200.0, 1000.0).unwrap(), 0.0);

        assert!(matches!(johnson_msv(-1.0, 1.0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(temp_from_msv(-1.0, 1.0, 1.0), Err(Error::Domain(_))));
        assert!(johnson_msv(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn symmetric_divider_without_attack() {
        let sol = solve_loop(&LoopSnapshot {
            u_alice_src: 1.0,
            u_bob_src: 0.0,
            r_alice: 1000.0,
            r_bob: 1000.0,
            attacker: AttackerSource::None,
        });
        assert_eq!(sol.u_wire, 0.5);
        assert_eq!(sol.i_wire, 0.5e-3);
        assert_eq!(sol.i_alice_end, sol.i_bob_end);
        assert_eq!(sol.u_alice_end, sol.u_bob_end);
    }

    #[test]
    fn injected_current_sees_parallel_resultant() {
        let sol = solve_loop(&LoopSnapshot {
            u_alice_src: 0.0,
            u_bob_src: 0.0,
            r_alice: 1000.0,
            r_bob: 160.0,
            attacker: AttackerSource::CurrentInjection(1e-3),
        });
        let expected = 1e-3 * parallel_resultant(1000.0, 160.0).unwrap();
        assert!(rel(sol.u_wire, expected) < 1e-12);
        assert!((sol.u_wire - 0.13793).abs() < 1e-5);
        assert!(rel(sol.i_bob_end - sol.i_alice_end, 1e-3) < 1e-12);
    }

    #[test]
    fn inserted_voltage_sees_serial_resultant() {
        let sol = solve_loop(&LoopSnapshot {
            u_alice_src: 0.0,
            u_bob_src: 0.0,
            r_alice: 2000.0,
            r_bob: 1000.0,
            attacker: AttackerSource::VoltageInsertion(3.0),
        });
        assert!(rel(sol.i_wire, 1e-3) < 1e-12);
        assert!(rel(sol.u_bob_end - sol.u_alice_end, 3.0) < 1e-12);
    }

    fn resistance() -> impl Strategy<Value = f64> {
        (-1.0f64..5.0).prop_map(|e| 10f64.powf(e))
    }

    fn volts() -> impl Strategy<Value = f64> {
        -10.0f64..10.0
    }

    proptest! {
        #[test]
        fn resultant_bounds(a in resistance(), b in resistance()) {
            let p = parallel_resultant(a, b).unwrap();
            let s = serial_resultant(a, b).unwrap();
            prop_assert!(p <= a.min(b));
            prop_assert!(s >= a.max(b));
            prop_assert_eq!(p, parallel_resultant(b, a).unwrap());
            prop_assert_eq!(s, serial_resultant(b, a).unwrap());
        }

        #[test]
        fn temperature_round_trip(t in 0.0f64..1e18, r in resistance(), b in 1.0f64..1e6) {
            let back = temp_from_msv(johnson_msv(t, r, b).unwrap(), r, b).unwrap();
            prop_assert!(rel(back, t) <= 1e-12);
        }

        #[test]
        fn clean_loop_ends_agree(ua in volts(), ub in volts(), ra in resistance(), rb in resistance()) {
            let sol = solve_loop(&LoopSnapshot {
                u_alice_src: ua, u_bob_src: ub, r_alice: ra, r_bob: rb,
                attacker: AttackerSource::None,
            });
            prop_assert_eq!(sol.i_alice_end, sol.i_bob_end);
            prop_assert_eq!(sol.u_alice_end, sol.u_bob_end);
        }

        #[test]
        fn closed_forms_hold(ua in volts(), ub in volts(), ra in resistance(), rb in resistance(), x in -1.0f64..1.0) {
            let inj = solve_loop(&LoopSnapshot {
                u_alice_src: ua, u_bob_src: ub, r_alice: ra, r_bob: rb,
                attacker: AttackerSource::CurrentInjection(x * 1e-2),
            });
            let i = x * 1e-2;
            let u_expected = (ua * rb + ub * ra + i * ra * rb) / (ra + rb);
            let scale = (ua * rb).abs() + (ub * ra).abs() + (i * ra * rb).abs();
            prop_assert!((inj.u_wire - u_expected).abs() <= 1e-12 * scale / (ra + rb));
            // Kirchhoff's current law at the wire node
            let i_scale = inj.i_alice_end.abs() + inj.i_bob_end.abs() + i.abs();
            prop_assert!((inj.i_bob_end - inj.i_alice_end - i).abs() <= 1e-12 * i_scale);

            let ins = solve_loop(&LoopSnapshot {
                u_alice_src: ua, u_bob_src: ub, r_alice: ra, r_bob: rb,
                attacker: AttackerSource::VoltageInsertion(x),
            });
            let i_expected = (ua - ub + x) / (ra + rb);
            let scale = (ua.abs() + ub.abs() + x.abs()) / (ra + rb);
            prop_assert!((ins.i_wire - i_expected).abs() <= 1e-12 * scale);
            let u_scale = ins.u_alice_end.abs() + ins.u_bob_end.abs() + x.abs();
            prop_assert!((ins.u_bob_end - ins.u_alice_end - x).abs() <= 1e-12 * u_scale);
        }

        #[test]
        fn superposition(ua in volts(), ub in volts(), ra in resistance(), rb in resistance(), x in -1.0f64..1.0) {
            for make in [AttackerSource::CurrentInjection as fn(f64) -> AttackerSource, AttackerSource::VoltageInsertion] {
                let solve = |ua, ub, a| solve_loop(&LoopSnapshot {
                    u_alice_src: ua, u_bob_src: ub, r_alice: ra, r_bob: rb, attacker: a,
                });
                let full = solve(ua, ub, make(x));
                let parts = [solve(ua, 0.0, make(0.0)), solve(0.0, ub, make(0.0)), solve(0.0, 0.0, make(x))];
                let pick: [fn(&LoopSolution) -> f64; 6] = [
                    |s| s.u_wire, |s| s.i_wire, |s| s.i_alice_end,
                    |s| s.i_bob_end, |s| s.u_alice_end, |s| s.u_bob_end,
                ];
                for f in pick {
                    let sum: f64 = parts.iter().map(f).sum();
                    let scale: f64 = parts.iter().map(|p| f(p).abs()).sum();
                    prop_assert!((f(&full) - sum).abs() <= 1e-12 * scale.max(f64::MIN_POSITIVE));
                }
            }
        }
    }
}
