use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::automaton::{PropSet, Symbol};
use super::SpecError;

/// Closed axis-aligned box `[lo, hi]`; degenerate axes are allowed.
/// Serialized as one `[lo, hi]` pair per axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[f64; 2]>", into = "Vec<[f64; 2]>")]
pub struct Aabb {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl TryFrom<Vec<[f64; 2]>> for Aabb {
    type Error = SpecError;

    fn try_from(axes: Vec<[f64; 2]>) -> Result<Self, SpecError> {
        let (lo, hi) = axes.into_iter().map(|[l, h]| (l, h)).unzip();
        Aabb::new(lo, hi)
    }
}

impl From<Aabb> for Vec<[f64; 2]> {
    fn from(b: Aabb) -> Self {
        b.lo.iter().zip(&b.hi).map(|(&l, &h)| [l, h]).collect()
    }
}

impl Aabb {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self, SpecError> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(SpecError::InvalidLabeling("box bounds differ in length".into()));
        }
        if lo.iter().chain(&hi).any(|v| !v.is_finite()) {
            return Err(SpecError::InvalidLabeling("box bound is not finite".into()));
        }
        if lo.iter().zip(&hi).any(|(l, h)| l > h) {
            return Err(SpecError::InvalidLabeling("box has lo > hi".into()));
        }
        Ok(Aabb { lo, hi })
    }

    /// `[lo, hi]` on every one of `dim` axes.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self, SpecError> {
        Aabb::new(vec![lo; dim], vec![hi; dim])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn contains(&self, y: &[f64]) -> bool {
        y.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (l, h))| l <= v && v <= h)
    }

    /// Euclidean distance from `y` to the box; zero inside.
    pub fn distance(&self, y: &[f64]) -> f64 {
        y.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(&v, (&l, &h))| {
                let d = (l - v).max(v - h).max(0.0);
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Smallest face slack `min_j min(y_j − lo_j, hi_j − y_j)`; equals the
    /// Euclidean distance to the complement when positive.
    pub fn depth(&self, y: &[f64]) -> f64 {
        y.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(&v, (&l, &h))| (v - l).min(h - v))
            .fold(f64::INFINITY, f64::min)
    }

    /// `[lo + ε, hi − ε]`, or `None` when that is empty.
    pub fn deflate(&self, eps: f64) -> Option<Aabb> {
        let lo: Vec<f64> = self.lo.iter().map(|l| l + eps).collect();
        let hi: Vec<f64> = self.hi.iter().map(|h| h - eps).collect();
        lo.iter().zip(&hi).all(|(l, h)| l <= h).then_some(Aabb { lo, hi })
    }

    /// `[lo − ε, hi + ε]`.
    pub fn inflate(&self, eps: f64) -> Aabb {
        Aabb {
            lo: self.lo.iter().map(|l| l - eps).collect(),
            hi: self.hi.iter().map(|h| h + eps).collect(),
        }
    }

    pub fn is_subset_of(&self, other: &Aabb) -> bool {
        self.lo.iter().zip(&other.lo).all(|(a, b)| a >= b)
            && self.hi.iter().zip(&other.hi).all(|(a, b)| a <= b)
    }
}

/// The set of outputs where one atomic proposition holds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub prop: String,
    pub boxes: Vec<Aabb>,
}

/// Labeling `L: ℝ^q → 2^AP` where proposition `p` holds exactly on the
/// union of its boxes. Regions of different propositions may overlap; the
/// letter of `y` is the set of propositions whose region contains it, and
/// points outside every region get the empty letter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPartition")]
pub struct LabeledPartition {
    dim: usize,
    regions: Vec<Region>,
}

#[derive(Deserialize)]
struct RawPartition {
    dim: usize,
    regions: Vec<Region>,
}

impl TryFrom<RawPartition> for LabeledPartition {
    type Error = SpecError;

    fn try_from(r: RawPartition) -> Result<Self, SpecError> {
        LabeledPartition::new(r.dim, r.regions)
    }
}

impl LabeledPartition {
    pub fn new(dim: usize, regions: Vec<Region>) -> Result<Self, SpecError> {
        let mut seen = BTreeSet::new();
        for r in &regions {
            if !seen.insert(r.prop.as_str()) {
                return Err(SpecError::InvalidLabeling(format!(
                    "proposition {} listed twice",
                    r.prop
                )));
            }
            if r.boxes.iter().any(|b| b.dim() != dim) {
                return Err(SpecError::InvalidLabeling(format!(
                    "a box of {} is not {dim}-dimensional",
                    r.prop
                )));
            }
        }
        Ok(LabeledPartition { dim, regions })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn props(&self) -> BTreeSet<String> {
        self.regions.iter().map(|r| r.prop.clone()).collect()
    }

    pub fn region(&self, prop: &str) -> Option<&Region> {
        self.regions.iter().find(|r| r.prop == prop)
    }

    fn check(&self, y: &[f64]) {
        assert_eq!(y.len(), self.dim, "output dimension mismatch");
    }

    pub fn label(&self, y: &[f64]) -> Symbol {
        self.check(y);
        Symbol::Letter(
            self.regions
                .iter()
                .filter(|r| r.boxes.iter().any(|b| b.contains(y)))
                .map(|r| r.prop.clone())
                .collect(),
        )
    }

    pub fn label_trajectory(&self, ys: &[Vec<f64>]) -> Vec<Symbol> {
        ys.iter().map(|y| self.label(y)).collect()
    }

    /// Boxes of `prop` deflated by `eps`, empty ones dropped.
    pub fn deflated_boxes(&self, prop: &str, eps: f64) -> Vec<Aabb> {
        self.region(prop)
            .map(|r| r.boxes.iter().filter_map(|b| b.deflate(eps)).collect())
            .unwrap_or_default()
    }

    /// `L^ε(y)`: the letter of `y` if the Euclidean `ε`-ball around `y`
    /// carries that same letter, otherwise [`Symbol::Fresh`].
    pub fn label_deflated(&self, y: &[f64], eps: f64) -> Symbol {
        self.check(y);
        for r in &self.regions {
            let depth = r.boxes.iter().map(|b| b.depth(y)).fold(f64::NEG_INFINITY, f64::max);
            let inside = r.boxes.iter().any(|b| b.contains(y));
            let robust = if inside {
                depth >= eps
            } else {
                r.boxes.iter().all(|b| b.distance(y) >= eps)
            };
            if !robust {
                return Symbol::Fresh;
            }
        }
        self.label(y)
    }

    pub fn label_trajectory_deflated(&self, ys: &[Vec<f64>], eps: f64) -> Vec<Symbol> {
        ys.iter().map(|y| self.label_deflated(y, eps)).collect()
    }

    /// `L^{−ε}(y)`: every letter that some point of the `ε`-neighborhood of
    /// `y` may carry. Proposition membership is over-approximated with
    /// boxes inflated per coordinate, so the result is a superset.
    pub fn label_inflated(&self, y: &[f64], eps: f64) -> Vec<Symbol> {
        self.check(y);
        let mut letters: Vec<PropSet> = vec![PropSet::new()];
        for r in &self.regions {
            let may_hold = r.boxes.iter().any(|b| b.inflate(eps).contains(y));
            let may_fail = r.boxes.iter().all(|b| b.depth(y) <= eps);
            let mut next = Vec::with_capacity(letters.len() * 2);
            for l in &letters {
                if may_fail {
                    next.push(l.clone());
                }
                if may_hold {
                    let mut with = l.clone();
                    with.insert(r.prop.clone());
                    next.push(with);
                }
            }
            letters = next;
        }
        letters.into_iter().map(Symbol::Letter).collect()
    }

    pub fn label_trajectory_inflated(&self, ys: &[Vec<f64>], eps: f64) -> Vec<Vec<Symbol>> {
        ys.iter().map(|y| self.label_inflated(y, eps)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    Lower,
    Upper,
}

/// Moves a satisfaction probability of the abstraction to the concrete
/// network: `max(0, p̂ − δ)` from below, `min(1, p̂ + δ)` from above.
pub fn transfer_probability(p_hat: f64, delta: f64, direction: Direction) -> Result<f64, SpecError> {
    for v in [p_hat, delta] {
        if !(0.0..=1.0).contains(&v) {
            return Err(SpecError::OutOfRange(v));
        }
    }
    Ok(match direction {
        Direction::Lower => (p_hat - delta).max(0.0),
        Direction::Upper => (p_hat + delta).min(1.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn interval(lo: f64, hi: f64) -> Aabb {
        Aabb::new(vec![lo], vec![hi]).unwrap()
    }

    /// A = [0, 4], B = [6, 10] on the line.
    fn line() -> LabeledPartition {
        LabeledPartition::new(
            1,
            vec![
                Region { prop: "A".into(), boxes: vec![interval(0.0, 4.0)] },
                Region { prop: "B".into(), boxes: vec![interval(6.0, 10.0)] },
            ],
        )
        .unwrap()
    }

    #[test]
    fn labels() {
        let l = line();
        assert_eq!(l.label(&[7.0]), Symbol::of(["B"]));
        assert_eq!(l.label(&[5.0]), Symbol::of([]));
        assert_eq!(l.label(&[4.0]), Symbol::of(["A"]));
        assert!(l.label_trajectory(&[]).is_empty());
    }

    #[test]
    fn box_deflation() {
        assert_eq!(interval(0.0, 10.0).deflate(1.0), Some(interval(1.0, 9.0)));
        assert_eq!(interval(0.0, 1.0).deflate(0.6), None);
        let t1 = Aabb::cube(3, -10.0, -6.0).unwrap();
        assert_eq!(t1.deflate(1.0), Some(Aabb::cube(3, -9.0, -7.0).unwrap()));
    }

    #[test]
    fn deflated_labels() {
        let l = line();
        assert_eq!(l.label_deflated(&[2.0], 1.0), Symbol::of(["A"]));
        assert_eq!(l.label_deflated(&[3.5], 1.0), Symbol::Fresh);
        assert_eq!(l.label_deflated(&[5.0], 1.0), Symbol::of([]));
        assert_eq!(l.label_deflated(&[5.0], 1.5), Symbol::Fresh);
        // too thin to survive deflation
        assert_eq!(l.label_deflated(&[2.0], 2.5), Symbol::Fresh);
        assert!(l.deflated_boxes("A", 2.5).is_empty());
    }

    #[test]
    fn degenerate_slab_only_repels() {
        let slab = Aabb::new(vec![0.0, 10.0], vec![1.0, 10.0]).unwrap();
        let l = LabeledPartition::new(2, vec![Region { prop: "O".into(), boxes: vec![slab] }]).unwrap();
        assert_eq!(l.label(&[0.5, 10.0]), Symbol::of(["O"]));
        assert_eq!(l.label_deflated(&[0.5, 10.0], 0.1), Symbol::Fresh);
        assert_eq!(l.label_deflated(&[0.5, 8.0], 1.0), Symbol::of([]));
    }

    #[test]
    fn inflated_labels() {
        let l = line();
        let near = l.label_inflated(&[4.5], 1.0);
        assert!(near.contains(&Symbol::of(["A"])));
        assert!(near.contains(&Symbol::of([])));
        // boxes 1.5ε apart: the midpoint sees both
        let both = l.label_inflated(&[5.0], 1.5);
        assert!(both.contains(&Symbol::of(["A"])) && both.contains(&Symbol::of(["B"])));
        for y in [2.0, 5.0, 8.0] {
            assert_eq!(l.label_inflated(&[y], 0.0), vec![l.label(&[y])]);
        }
    }

    #[test]
    fn deflation_is_monotone() {
        let b = Aabb::new(vec![-3.0, 0.0], vec![5.0, 2.0]).unwrap();
        let mut prev = b.clone();
        for k in 1..10 {
            match b.deflate(0.1 * k as f64) {
                Some(d) => {
                    assert!(d.is_subset_of(&prev));
                    prev = d;
                }
                None => break,
            }
        }
    }

    #[test]
    fn transfer() {
        let lo = transfer_probability(0.95, 0.104, Direction::Lower).unwrap();
        assert!((lo - 0.846).abs() < 1e-12);
        assert_eq!(transfer_probability(0.3, 0.0, Direction::Upper).unwrap(), 0.3);
        assert_eq!(transfer_probability(0.05, 0.2, Direction::Lower).unwrap(), 0.0);
        assert_eq!(transfer_probability(0.9, 0.2, Direction::Upper).unwrap(), 1.0);
        assert!(matches!(
            transfer_probability(1.2, 0.1, Direction::Lower),
            Err(SpecError::OutOfRange(_))
        ));
    }

    #[test]
    fn json_schema() {
        let text = r#"{"dim":1,"regions":[{"prop":"A","boxes":[[[0,4]]]}]}"#;
        let l: LabeledPartition = serde_json::from_str(text).unwrap();
        assert_eq!(l.region("A").unwrap().boxes[0], interval(0.0, 4.0));
        let bad = r#"{"dim":2,"regions":[{"prop":"A","boxes":[[[0,4]]]}]}"#;
        assert!(serde_json::from_str::<LabeledPartition>(bad).is_err());
        let back: LabeledPartition = serde_json::from_str(&serde_json::to_string(&l).unwrap()).unwrap();
        assert_eq!(back, l);
    }
}
