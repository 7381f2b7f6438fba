//! Zeeman level basis of the S1/2 <-> P1/2 system and the Clebsch-Gordan
//! coefficients that weight every optical coupling in it.
//!
//! Angular momenta are stored as doubled integers ([`HalfInt`]) so that level
//! labels compare exactly.

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};

/// A half-integer quantity stored as twice its value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HalfInt(i32);

impl HalfInt {
    pub const fn from_twice(twice: i32) -> Self {
        HalfInt(twice)
    }

    pub const fn from_int(n: i32) -> Self {
        HalfInt(2 * n)
    }

    /// Parses a float that must be an exact multiple of 1/2.
    pub fn from_f64(x: f64) -> Result<Self> {
        let t = 2.0 * x;
        if !t.is_finite() || (t - t.round()).abs() > 1e-9 {
            return Err(Error::Domain(format!("{x} is not a half-integer")));
        }
        Ok(HalfInt(t.round() as i32))
    }

    pub const fn twice(self) -> i32 {
        self.0
    }

    pub fn value(self) -> f64 {
        f64::from(self.0) / 2.0
    }

    pub const fn is_integer(self) -> bool {
        self.0 % 2 == 0
    }
}

impl std::ops::Neg for HalfInt {
    type Output = HalfInt;
    fn neg(self) -> HalfInt {
        HalfInt(-self.0)
    }
}

impl std::ops::Add for HalfInt {
    type Output = HalfInt;
    fn add(self, rhs: HalfInt) -> HalfInt {
        HalfInt(self.0 + rhs.0)
    }
}

impl std::ops::Sub for HalfInt {
    type Output = HalfInt;
    fn sub(self, rhs: HalfInt) -> HalfInt {
        HalfInt(self.0 - rhs.0)
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

/// Nuclear spin I, restricted to half-integers I >= 3/2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NuclearSpin {
    two_i: u32,
}

impl NuclearSpin {
    pub fn new(two_i: u32) -> Result<Self> {
        if two_i < 3 || two_i.is_multiple_of(2) {
            return Err(Error::Domain(format!(
                "nuclear spin 2I = {two_i} must be odd and >= 3"
            )));
        }
        Ok(NuclearSpin { two_i })
    }

    /// I = 3/2, the case of 137Ba+.
    pub fn three_halves() -> Self {
        NuclearSpin { two_i: 3 }
    }

    pub fn two_i(self) -> u32 {
        self.two_i
    }

    pub fn value(self) -> f64 {
        f64::from(self.two_i) / 2.0
    }

    /// F = I - 1/2.
    pub fn f_lower(self) -> HalfInt {
        HalfInt::from_twice(self.two_i as i32 - 1)
    }

    /// F = I + 1/2.
    pub fn f_upper(self) -> HalfInt {
        HalfInt::from_twice(self.two_i as i32 + 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Manifold {
    /// S1/2, F = I - 1/2
    SLower,
    /// S1/2, F = I + 1/2
    SUpper,
    /// P1/2, F = I + 1/2
    PUpper,
}

impl Manifold {
    pub fn is_ground(self) -> bool {
        !matches!(self, Manifold::PUpper)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Level {
    pub manifold: Manifold,
    pub f: HalfInt,
    pub m: HalfInt,
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self.manifold {
            Manifold::SLower | Manifold::SUpper => "S",
            Manifold::PUpper => "P",
        };
        write!(f, "|{name},F={},m={}>", self.f, self.m)
    }
}

/// Ordered Zeeman basis: S_lower by ascending m, then S_upper, then P_upper.
#[derive(Debug, Clone)]
pub struct LevelBasis {
    spin: NuclearSpin,
    levels: Vec<Level>,
    index: HashMap<(Manifold, HalfInt), usize>,
}

pub fn build_basis(spin: NuclearSpin) -> LevelBasis {
    let mut levels = Vec::with_capacity(3 * spin.two_i() as usize + 4);
    for (manifold, f) in [
        (Manifold::SLower, spin.f_lower()),
        (Manifold::SUpper, spin.f_upper()),
        (Manifold::PUpper, spin.f_upper()),
    ] {
        for tm in (-f.twice()..=f.twice()).step_by(2) {
            levels.push(Level {
                manifold,
                f,
                m: HalfInt::from_twice(tm),
            });
        }
    }
    let index = levels
        .iter()
        .enumerate()
        .map(|(i, l)| ((l.manifold, l.m), i))
        .collect();
    LevelBasis {
        spin,
        levels,
        index,
    }
}

impl LevelBasis {
    pub fn spin(&self) -> NuclearSpin {
        self.spin
    }

    pub fn dim(&self) -> usize {
        self.levels.len()
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn level(&self, i: usize) -> Level {
        self.levels[i]
    }

    pub fn index_of(&self, manifold: Manifold, m: HalfInt) -> Option<usize> {
        self.index.get(&(manifold, m)).copied()
    }

    pub fn indices_in(&self, manifold: Manifold) -> impl Iterator<Item = usize> + '_ {
        self.levels
            .iter()
            .enumerate()
            .filter(move |(_, l)| l.manifold == manifold)
            .map(|(i, _)| i)
    }

    /// Index of the pump dark state |S, F=I+1/2, m=0>.
    pub fn dark_state(&self) -> usize {
        self.index_of(Manifold::SUpper, HalfInt::from_int(0))
            .expect("F = I + 1/2 is integer for half-integer I")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarization {
    SigmaMinus,
    Pi,
    SigmaPlus,
}

impl Polarization {
    pub fn q(self) -> i32 {
        match self {
            Polarization::SigmaMinus => -1,
            Polarization::Pi => 0,
            Polarization::SigmaPlus => 1,
        }
    }

    pub fn from_q(q: i32) -> Result<Self> {
        match q {
            -1 => Ok(Polarization::SigmaMinus),
            0 => Ok(Polarization::Pi),
            1 => Ok(Polarization::SigmaPlus),
            _ => Err(Error::Domain(format!("polarization q = {q}"))),
        }
    }
}

fn factorial(n: i32) -> f64 {
    debug_assert!(n >= 0);
    (1..=n).fold(1.0, |acc, k| acc * f64::from(k))
}

fn check_state(f: HalfInt, m: HalfInt) -> Result<()> {
    if f.twice() < 0 || m.twice().abs() > f.twice() || (f.twice() - m.twice()) % 2 != 0 {
        return Err(Error::Domain(format!("|F={f}, m={m}>")));
    }
    Ok(())
}

/// Clebsch-Gordan coefficient <f1 m1; 1 (m2-m1) | f2 m2> for a dipole coupling
/// between a ground level (f1, m1) and an excited level (f2, m2), Condon-Shortley
/// phase. Zero when the triangle rule forbids the coupling.
pub fn cg(f1: HalfInt, m1: HalfInt, f2: HalfInt, m2: HalfInt) -> Result<f64> {
    check_state(f1, m1)?;
    check_state(f2, m2)?;
    let tq = m2.twice() - m1.twice();
    if tq.abs() > 2 {
        return Err(Error::Domain(format!(
            "m {m1} -> {m2} needs more than one unit of photon angular momentum"
        )));
    }
    if (f1.twice() + f2.twice()) % 2 != 0 {
        return Err(Error::Domain(format!(
            "F={f1} and F={f2} cannot be coupled by a photon"
        )));
    }
    if (f1.twice() - f2.twice()).abs() > 2 || f1.twice() + f2.twice() < 2 {
        return Ok(0.0);
    }
    Ok(racah(f1.twice(), m1.twice(), 2, tq, f2.twice(), m2.twice()))
}

/// Racah's closed-form sum for <j1 m1; j2 m2 | j m>, all arguments doubled.
/// Assumes valid, triangle-satisfying arguments with m = m1 + m2.
fn racah(j1: i32, m1: i32, j2: i32, m2: i32, j: i32, m: i32) -> f64 {
    debug_assert_eq!(m, m1 + m2);
    let h = |x: i32| x / 2;
    let norm = f64::from(j + 1)
        * factorial(h(j + j1 - j2))
        * factorial(h(j - j1 + j2))
        * factorial(h(j1 + j2 - j))
        / factorial(h(j1 + j2 + j) + 1);
    let weights = factorial(h(j + m))
        * factorial(h(j - m))
        * factorial(h(j1 - m1))
        * factorial(h(j1 + m1))
        * factorial(h(j2 - m2))
        * factorial(h(j2 + m2));

    let k_min = 0.max(h(j2 - j - m1)).max(h(j1 - j + m2));
    let k_max = h(j1 + j2 - j).min(h(j1 - m1)).min(h(j2 + m2));
    let mut sum = 0.0;
    for k in k_min..=k_max {
        let denom = factorial(k)
            * factorial(h(j1 + j2 - j) - k)
            * factorial(h(j1 - m1) - k)
            * factorial(h(j2 + m2) - k)
            * factorial(h(j - j2 + m1) + k)
            * factorial(h(j - j1 - m2) + k);
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign / denom;
    }
    (norm * weights).sqrt() * sum
}
