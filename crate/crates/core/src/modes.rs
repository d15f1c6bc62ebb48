//! LP-mode and mode-group algebra for power-law graded-index fiber.
//!
//! Group order follows the convention `m = nu + 2*mu + 1`, so LP01 sits in
//! group 3. The common principal mode number `q = 2*mu + nu - 1` equals
//! `m - 2`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Orientation {
    A,
    B,
}

/// A linearly polarized mode LP(nu, mu) with its spatial orientation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LpMode {
    nu: u32,
    mu: u32,
    orientation: Orientation,
}

impl LpMode {
    pub fn new(nu: u32, mu: u32, orientation: Orientation) -> Result<Self> {
        if mu < 1 {
            return Err(Error::InvalidIndex { nu: nu.into(), mu: mu.into() });
        }
        if nu == 0 && orientation == Orientation::B {
            return Err(Error::InvalidSpec(format!("LP0{mu} has no b orientation")));
        }
        Ok(LpMode { nu, mu, orientation })
    }

    pub fn nu(&self) -> u32 {
        self.nu
    }

    pub fn mu(&self) -> u32 {
        self.mu
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn group_order(&self) -> u32 {
        self.nu + 2 * self.mu + 1
    }
}

impl fmt::Display for LpMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.nu >= 10 || self.mu >= 10 {
            write!(f, "LP{}_{}", self.nu, self.mu)?;
        } else {
            write!(f, "LP{}{}", self.nu, self.mu)?;
        }
        match (self.nu, self.orientation) {
            (0, _) => Ok(()),
            (_, Orientation::A) => f.write_str("a"),
            (_, Orientation::B) => f.write_str("b"),
        }
    }
}

impl FromStr for LpMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidSpec(format!("cannot parse mode label {s:?}"));
        let body = s.strip_prefix("LP").ok_or_else(bad)?;
        let (digits, orientation) = match body.as_bytes().last() {
            Some(b'a') => (&body[..body.len() - 1], Some(Orientation::A)),
            Some(b'b') => (&body[..body.len() - 1], Some(Orientation::B)),
            _ => (body, None),
        };
        let (nu, mu) = match digits.split_once('_') {
            Some((n, m)) => (n.parse().map_err(|_| bad())?, m.parse().map_err(|_| bad())?),
            None if digits.len() == 2 && digits.bytes().all(|b| b.is_ascii_digit()) => {
                let d = digits.as_bytes();
                (u32::from(d[0] - b'0'), u32::from(d[1] - b'0'))
            }
            None => return Err(bad()),
        };
        let orientation = match (nu, orientation) {
            (0, None) => Orientation::A,
            (0, Some(_)) => return Err(bad()),
            (_, Some(o)) => o,
            (_, None) => return Err(bad()),
        };
        LpMode::new(nu, mu, orientation)
    }
}

impl Serialize for LpMode {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for LpMode {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// All LP modes of one group, sorted by `(nu, mu, orientation)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModeGroup {
    order: u32,
    members: Vec<LpMode>,
}

impl ModeGroup {
    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn members(&self) -> &[LpMode] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, mode: &LpMode) -> bool {
        self.members.contains(mode)
    }
}

pub fn group_order(nu: i64, mu: i64) -> Result<u32> {
    if nu < 0 || mu < 1 {
        return Err(Error::InvalidIndex { nu, mu });
    }
    u32::try_from(nu + 2 * mu + 1).map_err(|_| Error::InvalidIndex { nu, mu })
}

pub fn enumerate_group(m: i64) -> Result<ModeGroup> {
    if m < 3 {
        return Err(Error::InvalidOrder(m));
    }
    let order = u32::try_from(m).map_err(|_| Error::InvalidOrder(m))?;
    let mut members = Vec::with_capacity(order as usize - 2);
    for mu in 1..=(order - 1) / 2 {
        let nu = order - 1 - 2 * mu;
        members.push(LpMode { nu, mu, orientation: Orientation::A });
        if nu > 0 {
            members.push(LpMode { nu, mu, orientation: Orientation::B });
        }
    }
    members.sort();
    Ok(ModeGroup { order, members })
}

fn default_alpha() -> f64 {
    2.0
}

/// Power-law graded-index fiber.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiberSpec {
    /// Core radius [m].
    pub a: f64,
    /// On-axis refractive index.
    pub n1: f64,
    /// Relative index difference.
    pub delta: f64,
    /// Profile exponent.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Length [m].
    #[serde(rename = "L")]
    pub length: f64,
    /// Vacuum wavelength [m].
    pub lambda: f64,
    /// Profile-dispersion parameter.
    #[serde(default)]
    pub epsilon: f64,
}

impl Default for FiberSpec {
    fn default() -> Self {
        FiberSpec { a: 25e-6, n1: 1.47, delta: 0.01, alpha: 2.0, length: 5e3, lambda: 1550e-9, epsilon: 0.0 }
    }
}

impl FiberSpec {
    pub fn validate(&self) -> Result<()> {
        let fail = |what: &str| Err(Error::InvalidSpec(format!("fiber.{what}")));
        if !(self.a > 0.0 && self.a.is_finite()) {
            return fail("a must be positive");
        }
        if !(self.n1 >= 1.0 && self.n1.is_finite()) {
            return fail("n1 must be >= 1");
        }
        if !(self.delta > 0.0 && self.delta < 0.05) {
            return fail("delta must lie in (0, 0.05)");
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return fail("alpha must be positive");
        }
        if !(self.length >= 0.0 && self.length.is_finite()) {
            return fail("L must be >= 0");
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return fail("lambda must be positive");
        }
        if !self.epsilon.is_finite() {
            return fail("epsilon must be finite");
        }
        Ok(())
    }

    pub fn wavenumber(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.lambda
    }

    pub fn angular_frequency(&self) -> f64 {
        SPEED_OF_LIGHT * self.wavenumber()
    }

    /// Squared spot parameter `w^2 = 2a / (n1 k sqrt(2 delta))` of the
    /// Laguerre-Gauss fields.
    pub fn spot_size_sq(&self) -> f64 {
        2.0 * self.a / (self.n1 * self.wavenumber() * (2.0 * self.delta).sqrt())
    }

    pub(crate) fn require_parabolic(&self) -> Result<()> {
        if self.alpha == 2.0 {
            Ok(())
        } else {
            Err(Error::UnsupportedProfile(self.alpha))
        }
    }
}

/// `beta^2` for group `m` at angular frequency `omega`, with the index
/// contrast scaled as `delta(k) = delta * (k/k0)^(epsilon/2)`.
fn beta_sq_at(m: u32, fiber: &FiberSpec, omega: f64) -> f64 {
    let k0 = fiber.wavenumber();
    let k = omega / SPEED_OF_LIGHT;
    let delta = fiber.delta * (k / k0).powf(fiber.epsilon / 2.0);
    let q = f64::from(m) - 2.0;
    let nk = fiber.n1 * k;
    nk * nk - 2.0 * nk * (2.0 * delta).sqrt() * q / fiber.a
}

/// Propagation constant of group `m` at an arbitrary angular frequency.
pub fn propagation_constant_at(m: u32, fiber: &FiberSpec, omega: f64) -> Result<f64> {
    fiber.require_parabolic()?;
    if m < 3 {
        return Err(Error::InvalidOrder(m.into()));
    }
    let radicand = beta_sq_at(m, fiber, omega);
    if radicand > 0.0 {
        Ok(radicand.sqrt())
    } else {
        Err(Error::NotGuided(m))
    }
}

pub fn group_propagation_constant(m: u32, fiber: &FiberSpec) -> Result<f64> {
    propagation_constant_at(m, fiber, fiber.angular_frequency())
}

/// Propagation constant [rad/m]. Depends on the group order only.
pub fn propagation_constant(mode: &LpMode, fiber: &FiberSpec) -> Result<f64> {
    group_propagation_constant(mode.group_order(), fiber)
}

/// Group delay per unit length `d beta / d omega` [s/m], analytic.
pub fn group_delay(m: u32, fiber: &FiberSpec) -> Result<f64> {
    let beta = group_propagation_constant(m, fiber)?;
    let k = fiber.wavenumber();
    let q = f64::from(m) - 2.0;
    let s = (2.0 * fiber.delta).sqrt();
    let dbeta_dk = (fiber.n1 * fiber.n1 * k - fiber.n1 * s * q * (1.0 + fiber.epsilon / 4.0) / fiber.a) / beta;
    Ok(dbeta_dk / SPEED_OF_LIGHT)
}

/// The set of mode groups carried by a simulation, with a flat mode index.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeBasis {
    fiber: FiberSpec,
    groups: Vec<ModeGroup>,
    modes: Vec<LpMode>,
    group_of: Vec<usize>,
}

impl ModeBasis {
    pub fn new(fiber: FiberSpec, orders: &[u32]) -> Result<Self> {
        fiber.validate()?;
        if orders.is_empty() {
            return Err(Error::InvalidSpec("mode basis needs at least one group".into()));
        }
        let mut sorted = orders.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != orders.len() {
            return Err(Error::InvalidSpec("duplicate mode group in basis".into()));
        }
        let mut groups = Vec::with_capacity(orders.len());
        let mut modes = Vec::new();
        let mut group_of = Vec::new();
        for (gi, &m) in orders.iter().enumerate() {
            let group = enumerate_group(m.into())?;
            modes.extend_from_slice(group.members());
            group_of.extend(std::iter::repeat_n(gi, group.len()));
            groups.push(group);
        }
        Ok(ModeBasis { fiber, groups, modes, group_of })
    }

    pub fn fiber(&self) -> &FiberSpec {
        &self.fiber
    }

    pub fn groups(&self) -> &[ModeGroup] {
        &self.groups
    }

    pub fn modes(&self) -> &[LpMode] {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn index_of(&self, mode: &LpMode) -> Option<usize> {
        self.modes.iter().position(|m| m == mode)
    }

    /// Position (in `groups()`) of the group that owns flat mode index `i`.
    pub fn group_index(&self, i: usize) -> usize {
        self.group_of[i]
    }

    pub fn group_position(&self, order: u32) -> Option<usize> {
        self.groups.iter().position(|g| g.order() == order)
    }

    /// Flat index range of the modes of `groups()[g]`.
    pub fn group_range(&self, g: usize) -> std::ops::Range<usize> {
        let start: usize = self.groups[..g].iter().map(ModeGroup::len).sum();
        start..start + self.groups[g].len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lp(s: &str) -> LpMode {
        s.parse().unwrap()
    }

    #[test]
    fn group_order_examples() {
        assert_eq!(group_order(0, 2).unwrap(), 5);
        assert_eq!(group_order(2, 1).unwrap(), 5);
        assert_eq!(group_order(0, 1).unwrap(), 3);
        assert!(matches!(group_order(0, 0), Err(Error::InvalidIndex { .. })));
        assert!(matches!(group_order(-1, 1), Err(Error::InvalidIndex { .. })));
    }

    #[test]
    fn enumerate_examples() {
        let g5 = enumerate_group(5).unwrap();
        assert_eq!(g5.members(), &[lp("LP02"), lp("LP21a"), lp("LP21b")]);
        assert_eq!(enumerate_group(3).unwrap().members(), &[lp("LP01")]);
        let g6 = enumerate_group(6).unwrap();
        assert_eq!(g6.members(), &[lp("LP12a"), lp("LP12b"), lp("LP31a"), lp("LP31b")]);
        assert!(matches!(enumerate_group(2), Err(Error::InvalidOrder(2))));
    }

    #[test]
    fn group_sizes_match_brute_force() {
        for m in 3..=12u32 {
            let mut brute = Vec::new();
            for nu in 0..m {
                for mu in 1..m {
                    if nu + 2 * mu + 1 == m {
                        brute.push(LpMode::new(nu, mu, Orientation::A).unwrap());
                        if nu > 0 {
                            brute.push(LpMode::new(nu, mu, Orientation::B).unwrap());
                        }
                    }
                }
            }
            brute.sort();
            let g = enumerate_group(m.into()).unwrap();
            assert_eq!(g.members(), brute.as_slice());
            assert_eq!(g.len(), m as usize - 2);
            assert!(g.members().iter().all(|x| x.group_order() == m));
        }
    }

    #[test]
    fn lp_mode_invariants() {
        assert!(LpMode::new(0, 1, Orientation::B).is_err());
        assert!(LpMode::new(1, 0, Orientation::A).is_err());
        assert_eq!(lp("LP21b").to_string(), "LP21b");
        assert_eq!(lp("LP01").to_string(), "LP01");
        assert_eq!(lp("LP12_3a"), LpMode::new(12, 3, Orientation::A).unwrap());
        assert!("LP21".parse::<LpMode>().is_err());
        assert!("LP01a".parse::<LpMode>().is_err());
        assert!("XX01".parse::<LpMode>().is_err());
    }

    #[test]
    fn beta_below_axial_wavenumber_and_degenerate() {
        let f = FiberSpec::default();
        let nk = f.n1 * f.wavenumber();
        for m in 3..=12 {
            for mode in enumerate_group(m).unwrap().members() {
                assert!(propagation_constant(mode, &f).unwrap() < nk);
            }
        }
        let b1 = propagation_constant(&lp("LP02"), &f).unwrap();
        let b2 = propagation_constant(&lp("LP21a"), &f).unwrap();
        assert_eq!(b1.to_bits(), b2.to_bits());
    }

    #[test]
    fn beta_closed_form_value() {
        // Independent evaluation with the terms ordered differently.
        let f = FiberSpec::default();
        let k = 2.0 * std::f64::consts::PI / 1550e-9;
        let expected = 1.47 * k * (1.0 - 2.0 * (0.02f64).sqrt() / (1.47 * k * 25e-6)).sqrt();
        let got = group_propagation_constant(3, &f).unwrap();
        assert!(((got - expected) / expected).abs() < 1e-14, "{got} vs {expected}");
        // frozen from a 50-digit evaluation of the closed form
        assert!(((got - 5_953_232.330_105_845) / got).abs() < 1e-13, "{got}");
        let b6 = group_propagation_constant(6, &f).unwrap();
        assert!(((b6 - 5_936_221.330_052_321) / b6).abs() < 1e-13, "{b6}");
    }

    #[test]
    fn non_parabolic_rejected() {
        let f = FiberSpec { alpha: 1.9, ..FiberSpec::default() };
        assert!(matches!(propagation_constant(&lp("LP01"), &f), Err(Error::UnsupportedProfile(_))));
    }

    #[test]
    fn cut_off_groups_are_not_guided() {
        let f = FiberSpec { a: 1e-6, delta: 0.04, ..FiberSpec::default() };
        assert!(matches!(group_propagation_constant(40, &f), Err(Error::NotGuided(40))));
        assert!(group_delay(40, &f).is_err());
    }

    #[test]
    fn delay_differs_between_groups() {
        let f = FiberSpec::default();
        let taus: Vec<f64> = (3..=12).map(|m| group_delay(m, &f).unwrap()).collect();
        assert!(taus.windows(2).all(|w| w[1] > w[0]), "{taus:?}");
        // 50-digit numeric derivative of the closed form
        assert!((taus[0] / 4.903_394_413_072_507e-9 - 1.0).abs() < 1e-12);
        assert!((taus[3] / 4.903_427_821_129_867e-9 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn basis_indexing() {
        let basis = ModeBasis::new(FiberSpec::default(), &[3, 4, 5, 6]).unwrap();
        assert_eq!(basis.len(), 10);
        for (i, mode) in basis.modes().iter().enumerate() {
            assert_eq!(basis.index_of(mode), Some(i));
            let g = basis.group_index(i);
            assert!(basis.group_range(g).contains(&i));
            assert_eq!(basis.groups()[g].order(), mode.group_order());
        }
        assert!(ModeBasis::new(FiberSpec::default(), &[3, 3]).is_err());
        assert!(ModeBasis::new(FiberSpec::default(), &[]).is_err());
    }
}
