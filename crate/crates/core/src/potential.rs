//! Single-well profile `v`, effective radial potential `v_B` and the planar
//! double well `V`.

use crate::error::{Error, Result};
use std::fmt;
use std::str::FromStr;

/// Named radial well profiles.
///
/// All profiles vanish identically for `r >= a`. `Zero` is the free
/// magnetic problem (`v == 0`) and keeps `v0` only as the reference energy
/// used by the action integrals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Profile {
    /// `v0 * exp(1 - a^2 / (a^2 - r^2))` inside the disk of radius `a`.
    #[default]
    Bump,
    Zero,
}

impl Profile {
    pub fn name(self) -> &'static str {
        match self {
            Profile::Bump => "bump",
            Profile::Zero => "zero",
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Profile {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bump" => Ok(Profile::Bump),
            "zero" | "free" => Ok(Profile::Zero),
            other => Err(Error::InvalidSpec(format!("unknown profile `{other}`"))),
        }
    }
}

/// Radial well shape evaluated at a given support radius and depth.
pub trait RadialWell {
    /// `v(r)`.
    fn value(&self, r: f64, a: f64, v0: f64) -> f64;
    /// `v(r) - v0`, computed without cancellation near the minimum.
    fn excess(&self, r: f64, a: f64, v0: f64) -> f64;
    /// `v'(r)`.
    fn slope(&self, r: f64, a: f64, v0: f64) -> f64;
    /// `v''(0)`.
    fn curvature_at_origin(&self, a: f64, v0: f64) -> f64;
}

/// Below this exponent `exp` is subnormal; the bump returns exact zero.
const LOG_MIN_NORMAL: f64 = -708.396_418_532_264_1;

fn bump_exponent(r: f64, a: f64) -> Option<f64> {
    if r >= a {
        return None;
    }
    let e = -(r * r) / ((a - r) * (a + r));
    (e >= LOG_MIN_NORMAL).then_some(e)
}

impl RadialWell for Profile {
    fn value(&self, r: f64, a: f64, v0: f64) -> f64 {
        match self {
            Profile::Bump => bump_exponent(r, a).map_or(0.0, |e| v0 * e.exp()),
            Profile::Zero => 0.0,
        }
    }

    fn excess(&self, r: f64, a: f64, v0: f64) -> f64 {
        match self {
            Profile::Bump => bump_exponent(r, a).map_or(-v0, |e| v0 * e.exp_m1()),
            Profile::Zero => -v0,
        }
    }

    fn slope(&self, r: f64, a: f64, v0: f64) -> f64 {
        match self {
            Profile::Bump => bump_exponent(r, a).map_or(0.0, |e| {
                let d = (a - r) * (a + r);
                v0 * e.exp() * (-2.0 * a * a * r / (d * d))
            }),
            Profile::Zero => 0.0,
        }
    }

    fn curvature_at_origin(&self, a: f64, v0: f64) -> f64 {
        match self {
            Profile::Bump => -2.0 * v0 / (a * a),
            Profile::Zero => 0.0,
        }
    }
}

/// Physical parameters of one problem instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialSpec {
    /// Magnetic field strength `B > 0`.
    pub b: f64,
    /// Half-separation of the wells, centers at `(±L, 0)`.
    pub l: f64,
    /// Support radius of the single well.
    pub a: f64,
    /// Well depth `v0 < 0`.
    pub v0: f64,
    pub profile: Profile,
    vpp0: f64,
}

impl PotentialSpec {
    pub fn new(b: f64, l: f64, a: f64, v0: f64, profile: Profile) -> Result<Self> {
        if !(b > 0.0 && b.is_finite()) {
            return Err(Error::InvalidSpec(format!("B must be positive, got {b}")));
        }
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::InvalidSpec(format!("a must be positive, got {a}")));
        }
        if !(l > a && l.is_finite()) {
            return Err(Error::InvalidSpec(format!("need L > a, got L={l}, a={a}")));
        }
        let depth_ok = match profile {
            Profile::Zero => v0 <= 0.0,
            _ => v0 < 0.0,
        };
        if !depth_ok || !v0.is_finite() {
            return Err(Error::InvalidSpec(format!("v0 must be negative, got {v0}")));
        }
        let vpp0 = profile.curvature_at_origin(a, v0);
        Ok(PotentialSpec {
            b,
            l,
            a,
            v0,
            profile,
            vpp0,
        })
    }

    /// Bump-profile instance.
    pub fn bump(b: f64, l: f64, a: f64, v0: f64) -> Result<Self> {
        Self::new(b, l, a, v0, Profile::Bump)
    }

    /// The reference instance `B=1, L=2, a=1, v0=-1` with the bump profile.
    pub fn canonical() -> Self {
        Self::bump(1.0, 2.0, 1.0, -1.0).expect("valid")
    }

    /// Same parameters with a different half-separation.
    pub fn with_separation(&self, l: f64) -> Result<Self> {
        Self::new(self.b, l, self.a, self.v0, self.profile)
    }

    /// `v''(0)`.
    pub fn vpp0(&self) -> f64 {
        self.vpp0
    }

    /// Harmonic frequency `sqrt(B^2 + 2 v''(0))` of `v_B` at its minimum.
    pub fn omega(&self) -> f64 {
        (self.b * self.b + 2.0 * self.vpp0).sqrt()
    }

    /// `|v0|`.
    pub fn depth(&self) -> f64 {
        -self.v0
    }

    pub fn single_well(&self, r: f64) -> f64 {
        self.profile.value(r, self.a, self.v0)
    }

    /// `v(r) - v0 >= 0`.
    pub fn single_well_excess(&self, r: f64) -> f64 {
        self.profile.excess(r, self.a, self.v0)
    }

    pub fn single_well_slope(&self, r: f64) -> f64 {
        self.profile.slope(r, self.a, self.v0)
    }

    /// `v_B(r) = B^2 r^2 / 4 + v(r)`.
    pub fn effective(&self, r: f64) -> f64 {
        0.25 * self.b * self.b * r * r + self.single_well(r)
    }

    /// `v_B(r) - v0`, accurate near `r = 0`.
    pub fn effective_excess(&self, r: f64) -> f64 {
        0.25 * self.b * self.b * r * r + self.single_well_excess(r)
    }

    /// `v_B'(r)`.
    pub fn effective_slope(&self, r: f64) -> f64 {
        0.5 * self.b * self.b * r + self.single_well_slope(r)
    }

    /// `V(x, y) = v(|(x-L, y)|) + v(|(x+L, y)|)`.
    pub fn double_well(&self, x: f64, y: f64) -> f64 {
        self.single_well((x - self.l).hypot(y)) + self.single_well((x + self.l).hypot(y))
    }
}
