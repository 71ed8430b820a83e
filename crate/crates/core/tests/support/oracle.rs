//! Reference semantics for co-safe formulas on finite words, written
//! independently of the library's automaton construction.

#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::Rng;
use stochabs::speclang::{Dfa, Formula, PropSet, Symbol};

/// `w[i..]` is an informative prefix for `f`: recursive finite-word
/// semantics with strong next.
pub fn holds(f: &Formula, w: &[Symbol], i: usize) -> bool {
    let n = w.len();
    match f {
        Formula::True => true,
        Formula::Atom(p) => i < n && w[i].holds(p),
        Formula::NegAtom(p) => i < n && !w[i].holds(p),
        Formula::And(a, b) => holds(a, w, i) && holds(b, w, i),
        Formula::Or(a, b) => holds(a, w, i) || holds(b, w, i),
        Formula::Next(a) => i < n && holds(a, w, i + 1),
        Formula::Until(a, b) => (i..=n).any(|j| holds(b, w, j) && (i..j).all(|k| holds(a, w, k))),
        Formula::Eventually(a) => (i..=n).any(|j| holds(a, w, j)),
    }
}

/// Accepted by the specification automaton: informative, and no proper
/// prefix already is.
pub fn minimal_informative(f: &Formula, w: &[Symbol]) -> bool {
    holds(f, w, 0) && (0..w.len()).all(|k| !holds(f, &w[..k], 0))
}

fn nullable(f: &Formula) -> bool {
    holds(f, &[], 0)
}

type Obl = BTreeSet<Formula>;

fn unit(f: &Formula) -> Obl {
    [f.clone()].into_iter().filter(|g| *g != Formula::True).collect()
}

fn cross(xs: Vec<Obl>, ys: Vec<Obl>) -> Vec<Obl> {
    xs.iter()
        .flat_map(|x| ys.iter().map(move |y| x.union(y).cloned().collect()))
        .collect()
}

/// One-step unfolding: every way the obligations from the next position on
/// can look, given that `f` must hold at a position labeled `a`.
fn unfold(f: &Formula, a: &Symbol) -> Vec<Obl> {
    match f {
        Formula::True => vec![Obl::new()],
        Formula::Atom(p) => if a.holds(p) { vec![Obl::new()] } else { vec![] },
        Formula::NegAtom(p) => if a.holds(p) { vec![] } else { vec![Obl::new()] },
        Formula::And(l, r) => cross(unfold(l, a), unfold(r, a)),
        Formula::Or(l, r) => [unfold(l, a), unfold(r, a)].concat(),
        Formula::Next(g) => vec![unit(g)],
        Formula::Until(l, r) => [unfold(r, a), cross(unfold(l, a), vec![unit(f)])].concat(),
        Formula::Eventually(g) => [unfold(g, a), vec![unit(f)]].concat(),
    }
}

/// NFA over obligation sets, simulated by brute force on sets of states.
pub struct Nfa {
    pub states: BTreeSet<Obl>,
}

impl Nfa {
    pub fn start(f: &Formula) -> Self {
        Nfa { states: [unit(f)].into() }
    }

    pub fn step(&self, a: &Symbol) -> Self {
        let mut states = BTreeSet::new();
        for s in &self.states {
            let mut alts = vec![Obl::new()];
            for f in s {
                alts = cross(alts, unfold(f, a));
            }
            states.extend(alts);
        }
        Nfa { states }
    }

    pub fn accepts(&self) -> bool {
        self.states.iter().any(|s| s.iter().all(nullable))
    }
}

pub fn nfa_accepts_word(f: &Formula, w: &[Symbol]) -> bool {
    w.iter().fold(Nfa::start(f), |n, a| n.step(a)).accepts()
}

/// Compares the DFA with the brute-force NFA on every word of length at
/// most `max_len` over `letters`. Words are grouped by the pair (DFA
/// location, NFA state set, accepted-before flag) they reach, which decides
/// acceptance of all their extensions, so checking every reachable pair per
/// length covers every word. Returns the number of pairs checked.
pub fn exhaustive_agreement(f: &Formula, dfa: &Dfa, letters: &[Symbol], max_len: usize) -> Result<usize, String> {
    let start = Nfa::start(f);
    let mut layer: BTreeSet<(usize, BTreeSet<Obl>, bool)> = BTreeSet::new();
    layer.insert((dfa.initial(), start.states.clone(), false));
    let mut checked = 0;
    for len in 0..=max_len {
        let mut next = BTreeSet::new();
        for (q, states, before) in &layer {
            let nfa = Nfa { states: states.clone() };
            let want = nfa.accepts() && !before;
            checked += 1;
            if dfa.is_accepting(*q) != want {
                return Err(format!("{f}: disagreement at length {len} in location {}", dfa.name(*q)));
            }
            if len == max_len {
                continue;
            }
            let acc_now = *before || nfa.accepts();
            for a in letters {
                let q2 = dfa.step(*q, a).map_err(|e| e.to_string())?;
                next.insert((q2, nfa.step(a).states, acc_now));
            }
        }
        layer = next;
    }
    Ok(checked)
}

pub fn letters_of(alphabet: &[PropSet]) -> Vec<Symbol> {
    alphabet.iter().cloned().map(Symbol::Letter).collect()
}

pub fn random_formula<R: Rng>(rng: &mut R, atoms: &[String], depth: usize) -> Formula {
    let atom = |rng: &mut R| atoms[rng.random_range(0..atoms.len())].clone();
    if depth == 0 || rng.random_bool(0.2) {
        return match rng.random_range(0..6) {
            0 => Formula::True,
            1 | 2 => Formula::NegAtom(atom(rng)),
            _ => Formula::Atom(atom(rng)),
        };
    }
    let d = depth - 1;
    match rng.random_range(0..6) {
        0 => Formula::and(random_formula(rng, atoms, d), random_formula(rng, atoms, d)),
        1 => Formula::or(random_formula(rng, atoms, d), random_formula(rng, atoms, d)),
        2 => Formula::next(random_formula(rng, atoms, d)),
        3 | 4 => Formula::until(random_formula(rng, atoms, d), random_formula(rng, atoms, d)),
        _ => Formula::eventually(random_formula(rng, atoms, d)),
    }
}

pub fn random_word<R: Rng>(rng: &mut R, letters: &[Symbol], len: usize) -> Vec<Symbol> {
    (0..len).map(|_| letters[rng.random_range(0..letters.len())].clone()).collect()
}
