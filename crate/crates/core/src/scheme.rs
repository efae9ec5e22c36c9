//! Scheme instances: resistor quads, the noise levels that balance them, and
//! the fourth-resistor constructions that equalize one resultant.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::circuit::{check_resistance, temp_from_msv};
use crate::error::{Error, Result};

/// Relative tolerance for deciding that two resultants are equal.
pub const RESULTANT_EQ_TOL: f64 = 1e-9;

/// Default RMS amplitude of Alice's low-resistor generator, in volts.
pub const DEFAULT_U_LA_RMS: f64 = 1.0;

/// Default noise bandwidth in hertz.
pub const DEFAULT_BANDWIDTH: f64 = 1000.0;

/// The four resistors of a scheme instance, in ohms.
///
/// `HL` connects `r_ha` (Alice) and `r_lb` (Bob); `LH` connects `r_la` and `r_hb`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawQuad", into = "RawQuad")]
pub struct ResistorQuad {
    r_ha: f64,
    r_la: f64,
    r_hb: f64,
    r_lb: f64,
}

#[derive(Serialize, Deserialize)]
struct RawQuad {
    r_ha: f64,
    r_la: f64,
    r_hb: f64,
    r_lb: f64,
}

impl TryFrom<RawQuad> for ResistorQuad {
    type Error = Error;
    fn try_from(q: RawQuad) -> Result<Self> {
        ResistorQuad::new(q.r_ha, q.r_la, q.r_hb, q.r_lb)
    }
}

impl From<ResistorQuad> for RawQuad {
    fn from(q: ResistorQuad) -> Self {
        RawQuad {
            r_ha: q.r_ha,
            r_la: q.r_la,
            r_hb: q.r_hb,
            r_lb: q.r_lb,
        }
    }
}

impl ResistorQuad {
    pub fn new(r_ha: f64, r_la: f64, r_hb: f64, r_lb: f64) -> Result<Self> {
        for (name, r) in [("r_ha", r_ha), ("r_la", r_la), ("r_hb", r_hb), ("r_lb", r_lb)] {
            check_resistance(name, r).map_err(|e| Error::InvalidQuad(e.to_string()))?;
        }
        if r_ha <= r_la {
            return Err(Error::InvalidQuad(format!(
                "Alice's high resistor ({r_ha} Ω) must exceed her low resistor ({r_la} Ω)"
            )));
        }
        if r_hb <= r_lb {
            return Err(Error::InvalidQuad(format!(
                "Bob's high resistor ({r_hb} Ω) must exceed his low resistor ({r_lb} Ω)"
            )));
        }
        Ok(Self { r_ha, r_la, r_hb, r_lb })
    }

    /// The classical scheme with the same pair at both ends.
    pub fn ideal(r_h: f64, r_l: f64) -> Result<Self> {
        Self::new(r_h, r_l, r_h, r_l)
    }

    pub fn r_ha(&self) -> f64 {
        self.r_ha
    }
    pub fn r_la(&self) -> f64 {
        self.r_la
    }
    pub fn r_hb(&self) -> f64 {
        self.r_hb
    }
    pub fn r_lb(&self) -> f64 {
        self.r_lb
    }

    pub fn r_p_hl(&self) -> f64 {
        self.r_ha * self.r_lb / (self.r_ha + self.r_lb)
    }
    pub fn r_p_lh(&self) -> f64 {
        self.r_la * self.r_hb / (self.r_la + self.r_hb)
    }
    pub fn r_s_hl(&self) -> f64 {
        self.r_ha + self.r_lb
    }
    pub fn r_s_lh(&self) -> f64 {
        self.r_la + self.r_hb
    }
}

/// Mean-square generator voltages and their noise temperatures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoiseLevels {
    pub u2_ha: f64,
    pub u2_la: f64,
    pub u2_hb: f64,
    pub u2_lb: f64,
    pub t_ha: f64,
    pub t_la: f64,
    pub t_hb: f64,
    pub t_lb: f64,
    pub bandwidth: f64,
    pub u_la_rms: f64,
}

impl NoiseLevels {
    /// Build levels from mean-square voltages, deriving the temperatures.
    ///
    /// Used directly for special-purpose setups (for example silenced
    /// parties); balanced levels come from [`solve_vmg_levels`].
    pub fn from_msv(
        quad: &ResistorQuad,
        u2_ha: f64,
        u2_la: f64,
        u2_hb: f64,
        u2_lb: f64,
        bandwidth: f64,
    ) -> Result<Self> {
        Ok(Self {
            u2_ha,
            u2_la,
            u2_hb,
            u2_lb,
            t_ha: temp_from_msv(u2_ha, quad.r_ha, bandwidth)?,
            t_la: temp_from_msv(u2_la, quad.r_la, bandwidth)?,
            t_hb: temp_from_msv(u2_hb, quad.r_hb, bandwidth)?,
            t_lb: temp_from_msv(u2_lb, quad.r_lb, bandwidth)?,
            bandwidth,
            u_la_rms: u2_la.sqrt(),
        })
    }
}

/// Solve the mean-square levels that make the wire voltage, wire current and
/// power flow identical in the `HL` and `LH` states, with `U_LA` fixed.
///
/// The three balance conditions form a linear system in
/// `(u2_ha, u2_hb, u2_lb)`; it is row-equilibrated and solved by LU.
pub fn solve_vmg_levels(quad: &ResistorQuad, u_la_rms: f64, bandwidth: f64) -> Result<NoiseLevels> {
    if !(u_la_rms.is_finite() && u_la_rms > 0.0) {
        return Err(Error::Domain(format!("U_LA must be positive, got {u_la_rms}")));
    }
    if !(bandwidth.is_finite() && bandwidth > 0.0) {
        return Err(Error::Domain(format!("bandwidth must be positive, got {bandwidth}")));
    }
    let u2_la = u_la_rms * u_la_rms;
    let (u2_ha, u2_hb, u2_lb) = balance_msv(quad.r_ha, quad.r_la, quad.r_hb, quad.r_lb, u2_la)?;
    NoiseLevels::from_msv(quad, u2_ha, u2_la, u2_hb, u2_lb, bandwidth)
}

// With r_h > r_l at both ends every solution is positive; the check guards
// raw resistor sets that skip quad validation.
fn balance_msv(r_ha: f64, r_la: f64, r_hb: f64, r_lb: f64, u2_la: f64) -> Result<(f64, f64, f64)> {
    let w_hl = 1.0 / ((r_ha + r_lb) * (r_ha + r_lb));
    let w_lh = 1.0 / ((r_la + r_hb) * (r_la + r_hb));

    // Unknown order: u2_ha, u2_hb, u2_lb. Each row is HL side minus LH side.
    let mut a = Matrix3::new(
        w_hl * r_lb * r_lb,
        -w_lh * r_la * r_la,
        w_hl * r_ha * r_ha, // voltage
        w_hl,
        -w_lh,
        w_hl, // current
        w_hl * r_lb,
        w_lh * r_la,
        -w_hl * r_ha, // power
    );
    let mut b = Vector3::new(w_lh * u2_la * r_hb * r_hb, w_lh * u2_la, w_lh * u2_la * r_hb);
    for row in 0..3 {
        let scale = a.row(row).amax();
        if scale == 0.0 {
            return Err(Error::Configuration("balance system is singular".into()));
        }
        a.row_mut(row).scale_mut(1.0 / scale);
        b[row] /= scale;
    }
    let x = a
        .lu()
        .solve(&b)
        .filter(|x| x.iter().all(|v| v.is_finite()))
        .ok_or_else(|| Error::Configuration("balance system is singular".into()))?;

    for (name, v) in [("u2_HA", x[0]), ("u2_HB", x[1]), ("u2_LB", x[2])] {
        if v <= 0.0 {
            return Err(Error::Unphysical(format!(
                "{name} = {v:e} V² is not positive; the balance conditions cannot be met with these resistors"
            )));
        }
    }
    Ok((x[0], x[1], x[2]))
}

/// Bob's high resistor that equalizes the parallel resultants.
pub fn fck2_fourth_resistor(r_ha: f64, r_la: f64, r_lb: f64) -> Result<f64> {
    for (name, r) in [("r_ha", r_ha), ("r_la", r_la), ("r_lb", r_lb)] {
        check_resistance(name, r)?;
    }
    if r_ha <= r_la {
        return Err(Error::InvalidQuad(format!(
            "r_ha ({r_ha} Ω) must exceed r_la ({r_la} Ω)"
        )));
    }
    let den = r_ha * r_la - r_ha * r_lb + r_la * r_lb;
    if den <= 0.0 {
        return Err(Error::Unphysical(format!(
            "denominator r_ha·r_la − r_ha·r_lb + r_la·r_lb = {den} is not positive"
        )));
    }
    let r_hb = r_ha * r_la * r_lb / den;
    if r_hb <= r_lb {
        return Err(Error::InvalidQuad(format!(
            "resulting r_hb ({r_hb} Ω) does not exceed r_lb ({r_lb} Ω)"
        )));
    }
    Ok(r_hb)
}

/// Bob's low resistor that equalizes the serial resultants.
pub fn fck3_fourth_resistor(r_ha: f64, r_la: f64, r_hb: f64) -> Result<f64> {
    for (name, r) in [("r_ha", r_ha), ("r_la", r_la), ("r_hb", r_hb)] {
        check_resistance(name, r)?;
    }
    let r_lb = r_la + r_hb - r_ha;
    if r_lb <= 0.0 {
        return Err(Error::Unphysical(format!(
            "r_la + r_hb − r_ha = {r_lb} Ω is not positive"
        )));
    }
    if r_lb >= r_hb {
        return Err(Error::InvalidQuad(format!(
            "resulting r_lb ({r_lb} Ω) is not below r_hb ({r_hb} Ω)"
        )));
    }
    Ok(r_lb)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SchemeKind {
    IdealKljn,
    GenericVmg,
    /// Parallel resultants matched.
    Fck2,
    /// Serial resultants matched.
    Fck3,
}

impl std::fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SchemeKind::IdealKljn => "ideal KLJN",
            SchemeKind::GenericVmg => "generic VMG-KLJN",
            SchemeKind::Fck2 => "FCK2 (parallel resultants matched)",
            SchemeKind::Fck3 => "FCK3 (serial resultants matched)",
        })
    }
}

pub(crate) fn rel_diff(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

pub fn classify_scheme(quad: &ResistorQuad) -> SchemeKind {
    if quad.r_ha == quad.r_hb && quad.r_la == quad.r_lb {
        SchemeKind::IdealKljn
    } else if rel_diff(quad.r_p_hl(), quad.r_p_lh()) <= RESULTANT_EQ_TOL {
        SchemeKind::Fck2
    } else if rel_diff(quad.r_s_hl(), quad.r_s_lh()) <= RESULTANT_EQ_TOL {
        SchemeKind::Fck3
    } else {
        SchemeKind::GenericVmg
    }
}

/// Relative mismatch between the `HL` and `LH` value of each balanced quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BalanceResiduals {
    pub voltage: f64,
    pub current: f64,
    pub power: f64,
}

impl BalanceResiduals {
    pub fn max(&self) -> f64 {
        self.voltage.max(self.current).max(self.power)
    }
}

/// Analytic wire statistics of the two secure states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NominalWireStats {
    pub u2_wire_hl: f64,
    pub u2_wire_lh: f64,
    pub i2_wire_hl: f64,
    pub i2_wire_lh: f64,
    /// Mean power flow, positive from Alice to Bob.
    pub p_hl: f64,
    pub p_lh: f64,
    pub r_p_hl: f64,
    pub r_p_lh: f64,
    pub r_s_hl: f64,
    pub r_s_lh: f64,
    // Sums of absolute terms in the power expressions; they set the scale of
    // the power residual, which is ~0 at thermal equilibrium.
    power_scale_hl: f64,
    power_scale_lh: f64,
}

impl NominalWireStats {
    /// Relative residuals. Each is normalized by the larger magnitude of the
    /// terms forming the two sides, so the power residual stays meaningful
    /// when both powers vanish.
    pub fn residuals(&self) -> BalanceResiduals {
        let power_scale = self.power_scale_hl.max(self.power_scale_lh);
        BalanceResiduals {
            voltage: rel_diff(self.u2_wire_hl, self.u2_wire_lh),
            current: rel_diff(self.i2_wire_hl, self.i2_wire_lh),
            power: if power_scale == 0.0 {
                0.0
            } else {
                (self.p_hl - self.p_lh).abs() / power_scale
            },
        }
    }

    pub fn is_balanced(&self, tol: f64) -> bool {
        self.residuals().max() <= tol
    }

    /// Nominal secure-state RMS wire voltage.
    pub fn u_rms(&self) -> f64 {
        self.u2_wire_hl.sqrt()
    }

    /// Nominal secure-state RMS wire current.
    pub fn i_rms(&self) -> f64 {
        self.i2_wire_hl.sqrt()
    }
}

pub fn nominal_wire_stats(quad: &ResistorQuad, levels: &NoiseLevels) -> NominalWireStats {
    let side = |u2_alice: f64, r_alice: f64, u2_bob: f64, r_bob: f64| {
        let w = 1.0 / ((r_alice + r_bob) * (r_alice + r_bob));
        let u2 = (u2_alice * r_bob * r_bob + u2_bob * r_alice * r_alice) * w;
        let i2 = (u2_alice + u2_bob) * w;
        let p = (u2_alice * r_bob - u2_bob * r_alice) * w;
        let p_scale = (u2_alice * r_bob).abs() * w + (u2_bob * r_alice).abs() * w;
        (u2, i2, p, p_scale)
    };
    let (u2_hl, i2_hl, p_hl, ps_hl) = side(levels.u2_ha, quad.r_ha, levels.u2_lb, quad.r_lb);
    let (u2_lh, i2_lh, p_lh, ps_lh) = side(levels.u2_la, quad.r_la, levels.u2_hb, quad.r_hb);
    NominalWireStats {
        u2_wire_hl: u2_hl,
        u2_wire_lh: u2_lh,
        i2_wire_hl: i2_hl,
        i2_wire_lh: i2_lh,
        p_hl,
        p_lh,
        r_p_hl: quad.r_p_hl(),
        r_p_lh: quad.r_p_lh(),
        r_s_hl: quad.r_s_hl(),
        r_s_lh: quad.r_s_lh(),
        power_scale_hl: ps_hl,
        power_scale_lh: ps_lh,
    }
}
