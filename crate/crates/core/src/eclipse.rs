//! Eclipse symbols and sequences.
//!
//! At a collinear instant the symbol is the label (1, 2 or 3) of the body
//! lying between the other two.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::triangle::{squared_sides, unit_moment, BodyState, MassTriple};

/// Projected positions closer than this times `sqrt(I1)` are ambiguous.
pub const AMBIGUITY_REL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EclipseEvent {
    pub t: f64,
    /// Label of the middle body, 1..=3.
    pub symbol: u8,
    /// Sign of `dz/dt` at the crossing; 0 for grazing events.
    pub direction: i8,
    pub grazing: bool,
    /// Normalized area at the reported time.
    pub z: f64,
}

/// Label of the median body along the dominant second-moment axis of the
/// centered configuration.
pub fn classify(m: &MassTriple, state: &BodyState) -> Result<u8> {
    let com = state.center_of_mass(m);
    let x = state.pos.map(|p| p - com);
    let w = m.masses();
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for k in 0..3 {
        sxx += w[k] * x[k].x * x[k].x;
        syy += w[k] * x[k].y * x[k].y;
        sxy += w[k] * x[k].x * x[k].y;
    }
    let angle = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    let (sin, cos) = angle.sin_cos();
    let proj = x.map(|p| p.x * cos + p.y * sin);
    let scale = unit_moment(&squared_sides(&state.pos)).sqrt();
    for (a, b) in [(0, 1), (1, 2), (0, 2)] {
        if (proj[a] - proj[b]).abs() <= AMBIGUITY_REL * scale {
            return Err(Error::Ambiguous(a + 1, b + 1));
        }
    }
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| proj[a].total_cmp(&proj[b]));
    Ok(order[1] as u8 + 1)
}

/// Ordered eclipse symbols with their times and crossing directions.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EclipseSequence {
    pub symbols: Vec<u8>,
    pub times: Vec<f64>,
    pub directions: Vec<i8>,
}

impl EclipseSequence {
    /// Sequence of the given events; grazing events are dropped unless
    /// `keep_grazing` is set.
    pub fn from_events(events: &[EclipseEvent], keep_grazing: bool) -> Self {
        let kept = events.iter().filter(|e| keep_grazing || !e.grazing);
        let mut seq = Self::default();
        for e in kept {
            seq.symbols.push(e.symbol);
            seq.times.push(e.t);
            seq.directions.push(e.direction);
        }
        seq
    }

    /// Sequence without times or directions, e.g. from `"1212"`.
    pub fn from_symbols(text: &str) -> Result<Self> {
        let symbols = text
            .chars()
            .map(|c| match c {
                '1' | '2' | '3' => Ok(c as u8 - b'0'),
                _ => Err(Error::Invalid(format!("bad eclipse symbol {c:?}"))),
            })
            .collect::<Result<Vec<u8>>>()?;
        let n = symbols.len();
        Ok(Self { symbols, times: (0..n).map(|k| k as f64).collect(), directions: vec![0; n] })
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn text(&self) -> String {
        symbols_text(&self.symbols)
    }

    /// Largest time between consecutive eclipses.
    pub fn max_gap(&self) -> Option<f64> {
        self.times.windows(2).map(|w| w[1] - w[0]).reduce(f64::max)
    }
}

pub fn symbols_text(symbols: &[u8]) -> String {
    symbols.iter().map(|s| char::from(b'0' + s)).collect()
}

/// Smallest repeat unit of a sequence and how many times it repeats.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepeatUnit {
    pub unit: Vec<u8>,
    pub count: usize,
}

impl RepeatUnit {
    /// Plain-text form such as `"123123 x3"`.
    pub fn text(&self) -> String {
        format!("{} x{}", symbols_text(&self.unit), self.count)
    }
}

/// Smallest block whose repetition gives the whole sequence. Letters are
/// compared as `(symbol, direction)` pairs, so a block and its
/// orientation-reversed copy are not identified.
pub fn periodic_reduce(seq: &EclipseSequence) -> Result<RepeatUnit> {
    let n = seq.len();
    if n == 0 {
        return Err(Error::Invalid("empty eclipse sequence".into()));
    }
    let letters: Vec<(u8, i8)> = seq.symbols.iter().copied().zip(seq.directions.iter().copied()).collect();
    let d = (1..=n)
        .find(|&d| n.is_multiple_of(d) && (d..n).all(|i| letters[i] == letters[i - d]))
        .unwrap_or(n);
    Ok(RepeatUnit { unit: seq.symbols[..d].to_vec(), count: n / d })
}

/// JSON-friendly summary of a sequence and its reduction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceReport {
    pub symbols: String,
    pub times: Vec<f64>,
    pub unit: String,
    pub count: usize,
}

impl SequenceReport {
    pub fn new(seq: &EclipseSequence) -> Self {
        let (unit, count) = match periodic_reduce(seq) {
            Ok(r) => (symbols_text(&r.unit), r.count),
            Err(_) => (String::new(), 0),
        };
        Self { symbols: seq.text(), times: seq.times.clone(), unit, count }
    }

    pub fn text(&self) -> String {
        if self.count == 0 {
            "(none)".to_string()
        } else {
            format!("{} x{}", self.unit, self.count)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vec2::Vec2;

    fn state(p: [(f64, f64); 3]) -> BodyState {
        BodyState::at_rest(p.map(|(x, y)| Vec2::new(x, y)))
    }

    #[test]
    fn middle_body_examples() {
        let eq = MassTriple::equal();
        assert_eq!(classify(&eq, &state([(-1.0, 0.0), (0.0, 0.0), (2.0, 0.0)])).unwrap(), 2);
        assert_eq!(classify(&eq, &state([(0.0, 0.0), (5.0, 0.0), (2.0, 0.0)])).unwrap(), 3);
        let st = state([(-1.0, 0.0), (0.0, 0.0), (2.0, 0.0)]).permute([1, 0, 2]);
        assert_eq!(classify(&eq, &st).unwrap(), 1);
    }

    #[test]
    fn vertical_and_tilted_lines() {
        let m = MassTriple::new(1.0, 5.0, 2.0).unwrap();
        assert_eq!(classify(&m, &state([(0.0, 3.0), (0.0, -1.0), (0.0, 1.0)])).unwrap(), 3);
        assert_eq!(classify(&m, &state([(1.0, 1.0), (-2.0, -2.0), (4.0, 4.0)])).unwrap(), 1);
    }

    #[test]
    fn collision_is_ambiguous() {
        let eq = MassTriple::equal();
        assert!(matches!(
            classify(&eq, &state([(0.0, 0.0), (0.0, 0.0), (1.0, 0.0)])),
            Err(Error::Ambiguous(1, 2))
        ));
    }

    #[test]
    fn reductions() {
        let r = periodic_reduce(&EclipseSequence::from_symbols("1212").unwrap()).unwrap();
        assert_eq!((symbols_text(&r.unit), r.count), ("12".to_string(), 2));
        let r = periodic_reduce(&EclipseSequence::from_symbols("123").unwrap()).unwrap();
        assert_eq!((symbols_text(&r.unit), r.count), ("123".to_string(), 1));
        assert_eq!(r.text(), "123 x1");
        let mut seq = EclipseSequence::from_symbols("123123123123").unwrap();
        seq.directions = [1, -1, 1, -1, 1, -1, 1, -1, 1, -1, 1, -1].to_vec();
        let r = periodic_reduce(&seq).unwrap();
        assert_eq!(r.text(), "123123 x2");
        assert!(periodic_reduce(&EclipseSequence::default()).is_err());
        assert!(EclipseSequence::from_symbols("124").is_err());
    }
}
