use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::formula::Formula;
use super::SpecError;

/// Cap on the number of locations produced by determinization.
pub const MAX_LOCATIONS: usize = 1 << 16;

/// A letter of `2^AP`: the set of propositions that hold.
pub type PropSet = BTreeSet<String>;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Symbol {
    Letter(PropSet),
    /// The letter `φ∘` emitted by a deflated labeling near region boundaries.
    Fresh,
}

impl Symbol {
    pub fn of<'a>(props: impl IntoIterator<Item = &'a str>) -> Self {
        Symbol::Letter(props.into_iter().map(String::from).collect())
    }

    pub fn holds(&self, p: &str) -> bool {
        match self {
            Symbol::Letter(s) => s.contains(p),
            Symbol::Fresh => false,
        }
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Symbol::Letter(s) => {
                write!(f, "{{")?;
                for (i, p) in s.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{p}")?;
                }
                write!(f, "}}")
            }
            Symbol::Fresh => write!(f, "φ∘"),
        }
    }
}

/// All subsets of `props`, ordered by the bitmask over the sorted props.
pub fn powerset_alphabet(props: &BTreeSet<String>) -> Result<Vec<PropSet>, SpecError> {
    if props.len() > 16 {
        return Err(SpecError::InvalidAlphabet);
    }
    let list: Vec<&String> = props.iter().collect();
    Ok((0..1usize << list.len())
        .map(|mask| {
            list.iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, p)| (*p).clone())
                .collect()
        })
        .collect())
}

/// Deterministic finite automaton with a total transition table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dfa {
    alphabet: Vec<Symbol>,
    names: Vec<String>,
    initial: usize,
    accepting: Vec<bool>,
    /// `trans[q][a]` for letter index `a`.
    trans: Vec<Vec<usize>>,
}

impl Dfa {
    pub fn new(
        alphabet: Vec<Symbol>,
        names: Vec<String>,
        initial: usize,
        accepting: Vec<bool>,
        trans: Vec<Vec<usize>>,
    ) -> Result<Self, SpecError> {
        let distinct: BTreeSet<&Symbol> = alphabet.iter().collect();
        if alphabet.is_empty() || distinct.len() != alphabet.len() {
            return Err(SpecError::InvalidAlphabet);
        }
        let n = names.len();
        let total = initial < n
            && accepting.len() == n
            && trans.len() == n
            && trans
                .iter()
                .all(|row| row.len() == alphabet.len() && row.iter().all(|&q| q < n));
        if !total {
            return Err(SpecError::InvalidLabeling(
                "transition table is not total over the locations".into(),
            ));
        }
        Ok(Dfa {
            alphabet,
            names,
            initial,
            accepting,
            trans,
        })
    }

    pub fn num_locations(&self) -> usize {
        self.names.len()
    }

    pub fn alphabet(&self) -> &[Symbol] {
        &self.alphabet
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn name(&self, q: usize) -> &str {
        &self.names[q]
    }

    pub fn is_accepting(&self, q: usize) -> bool {
        self.accepting[q]
    }

    pub fn accepting(&self) -> Vec<usize> {
        (0..self.num_locations()).filter(|&q| self.accepting[q]).collect()
    }

    /// Non-accepting and closed under every letter.
    pub fn is_sink(&self, q: usize) -> bool {
        !self.accepting[q] && self.trans[q].iter().all(|&r| r == q)
    }

    pub fn letter_index(&self, a: &Symbol) -> Result<usize, SpecError> {
        self.alphabet
            .iter()
            .position(|s| s == a)
            .ok_or_else(|| SpecError::UnknownLetter(a.to_string()))
    }

    pub fn successor(&self, q: usize, letter: usize) -> usize {
        self.trans[q][letter]
    }

    pub fn step(&self, q: usize, a: &Symbol) -> Result<usize, SpecError> {
        Ok(self.trans[q][self.letter_index(a)?])
    }

    /// Location reached after the whole word.
    pub fn run(&self, word: &[Symbol]) -> Result<usize, SpecError> {
        word.iter().try_fold(self.initial, |q, a| self.step(q, a))
    }

    /// Accepted iff the run ends in an accepting location.
    pub fn run_word(&self, word: &[Symbol]) -> Result<bool, SpecError> {
        Ok(self.accepting[self.run(word)?])
    }

    /// Some prefix of length at most `horizon + 1` is accepted.
    pub fn accepts_within(&self, word: &[Symbol], horizon: usize) -> Result<bool, SpecError> {
        let mut q = self.initial;
        if self.accepting[q] {
            return Ok(true);
        }
        for a in word.iter().take(horizon + 1) {
            q = self.step(q, a)?;
            if self.accepting[q] {
                return Ok(true);
            }
        }
        Ok(false)
    }

    /// Existential version of [`Dfa::accepts_within`] for a word whose
    /// positions carry sets of admissible letters.
    pub fn accepts_within_any(&self, word: &[Vec<Symbol>], horizon: usize) -> Result<bool, SpecError> {
        let mut current = BTreeSet::from([self.initial]);
        if self.accepting[self.initial] {
            return Ok(true);
        }
        for choices in word.iter().take(horizon + 1) {
            let idx = choices
                .iter()
                .map(|a| self.letter_index(a))
                .collect::<Result<Vec<_>, _>>()?;
            let next: BTreeSet<usize> = current
                .iter()
                .flat_map(|&q| idx.iter().map(move |&a| (q, a)))
                .map(|(q, a)| self.trans[q][a])
                .collect();
            if next.iter().any(|&q| self.accepting[q]) {
                return Ok(true);
            }
            current = next;
        }
        Ok(false)
    }

    /// Moore partition refinement restricted to the reachable part.
    pub fn minimized(&self) -> Dfa {
        let reach = self.reachable();
        let mut class: BTreeMap<usize, usize> =
            reach.iter().map(|&q| (q, usize::from(self.accepting[q]))).collect();
        loop {
            let mut sigs: BTreeMap<(usize, Vec<usize>), usize> = BTreeMap::new();
            let mut next = BTreeMap::new();
            for &q in &reach {
                let sig = (class[&q], self.trans[q].iter().map(|r| class[r]).collect());
                let len = sigs.len();
                let id = *sigs.entry(sig).or_insert(len);
                next.insert(q, id);
            }
            let stable = sigs.len() == class.values().collect::<BTreeSet<_>>().len();
            class = next;
            if stable {
                break;
            }
        }
        let count = class.values().collect::<BTreeSet<_>>().len();
        let mut names = vec![String::new(); count];
        let mut accepting = vec![false; count];
        let mut trans = vec![Vec::new(); count];
        for &q in &reach {
            let c = class[&q];
            if trans[c].is_empty() {
                names[c] = self.names[q].clone();
                accepting[c] = self.accepting[q];
                trans[c] = self.trans[q].iter().map(|r| class[r]).collect();
            }
        }
        Dfa {
            alphabet: self.alphabet.clone(),
            names,
            initial: class[&self.initial],
            accepting,
            trans,
        }
    }

    fn reachable(&self) -> Vec<usize> {
        let mut seen = vec![false; self.num_locations()];
        let mut queue = VecDeque::from([self.initial]);
        seen[self.initial] = true;
        let mut out = Vec::new();
        while let Some(q) = queue.pop_front() {
            out.push(q);
            for &r in &self.trans[q] {
                if !seen[r] {
                    seen[r] = true;
                    queue.push_back(r);
                }
            }
        }
        out
    }

    /// Graph isomorphism of the reachable parts, matching letters by value
    /// and respecting initial and accepting locations.
    pub fn isomorphic(&self, other: &Dfa) -> bool {
        let mine: BTreeSet<&Symbol> = self.alphabet.iter().collect();
        let theirs: BTreeSet<&Symbol> = other.alphabet.iter().collect();
        if mine != theirs {
            return false;
        }
        let letter_map: Vec<usize> = self
            .alphabet
            .iter()
            .map(|a| other.letter_index(a).expect("same alphabet"))
            .collect();
        let mut fwd: BTreeMap<usize, usize> = BTreeMap::new();
        let mut bwd: BTreeMap<usize, usize> = BTreeMap::new();
        let mut queue = VecDeque::from([(self.initial, other.initial)]);
        fwd.insert(self.initial, other.initial);
        bwd.insert(other.initial, self.initial);
        while let Some((p, q)) = queue.pop_front() {
            if self.accepting[p] != other.accepting[q] {
                return false;
            }
            for (a, &b) in letter_map.iter().enumerate() {
                let (p2, q2) = (self.trans[p][a], other.trans[q][b]);
                match (fwd.get(&p2), bwd.get(&q2)) {
                    (None, None) => {
                        fwd.insert(p2, q2);
                        bwd.insert(q2, p2);
                        queue.push_back((p2, q2));
                    }
                    (Some(&x), Some(&y)) if x == q2 && y == p2 => {}
                    _ => return false,
                }
            }
        }
        fwd.len() == self.reachable().len() && bwd.len() == other.reachable().len()
    }

    /// Graphviz rendering; parallel edges are merged into one labeled edge.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph dfa {\n  rankdir=LR;\n  init [shape=point];\n");
        for q in 0..self.num_locations() {
            let shape = if self.accepting[q] { "doublecircle" } else { "circle" };
            out.push_str(&format!("  q{q} [label=\"{}\", shape={shape}];\n", self.names[q]));
        }
        out.push_str(&format!("  init -> q{};\n", self.initial));
        for q in 0..self.num_locations() {
            let mut by_target: BTreeMap<usize, Vec<String>> = BTreeMap::new();
            for (a, &r) in self.trans[q].iter().enumerate() {
                by_target.entry(r).or_default().push(self.alphabet[a].to_string());
            }
            for (r, labels) in by_target {
                let label = if labels.len() == self.alphabet.len() {
                    "*".to_string()
                } else {
                    labels.join(" ")
                };
                out.push_str(&format!("  q{q} -> q{r} [label=\"{label}\"];\n"));
            }
        }
        out.push_str("}\n");
        out
    }
}

type Obligations = BTreeSet<Formula>;

fn nullable(f: &Formula) -> bool {
    match f {
        Formula::True => true,
        Formula::Atom(_) | Formula::NegAtom(_) | Formula::Next(_) => false,
        Formula::And(a, b) => nullable(a) && nullable(b),
        Formula::Or(a, b) => nullable(a) || nullable(b),
        Formula::Until(_, b) => nullable(b),
        Formula::Eventually(a) => nullable(a),
    }
}

fn single(f: &Formula) -> Obligations {
    let mut s = Obligations::new();
    if *f != Formula::True {
        s.insert(f.clone());
    }
    s
}

/// Drops alternatives that carry a superset of another's obligations.
fn antichain(mut alts: Vec<Obligations>) -> Vec<Obligations> {
    alts.sort_by_key(|s| s.len());
    alts.dedup();
    let mut out: Vec<Obligations> = Vec::new();
    for s in alts {
        if !out.iter().any(|t| t.is_subset(&s)) {
            out.push(s);
        }
    }
    out
}

fn product(xs: &[Obligations], ys: &[Obligations]) -> Vec<Obligations> {
    let mut out = Vec::with_capacity(xs.len() * ys.len());
    for x in xs {
        for y in ys {
            out.push(x.union(y).cloned().collect());
        }
    }
    antichain(out)
}

/// Alternatives for what must hold from the next position on, given that
/// `f` must hold at a position labeled `a`.
fn expand(f: &Formula, a: &Symbol) -> Vec<Obligations> {
    match f {
        Formula::True => vec![Obligations::new()],
        Formula::Atom(p) => {
            if a.holds(p) {
                vec![Obligations::new()]
            } else {
                vec![]
            }
        }
        Formula::NegAtom(p) => {
            if a.holds(p) {
                vec![]
            } else {
                vec![Obligations::new()]
            }
        }
        Formula::And(l, r) => product(&expand(l, a), &expand(r, a)),
        Formula::Or(l, r) => {
            let mut v = expand(l, a);
            v.extend(expand(r, a));
            antichain(v)
        }
        Formula::Next(g) => vec![single(g)],
        Formula::Until(l, r) => {
            let mut v = expand(r, a);
            v.extend(product(&expand(l, a), &[single(f)]));
            antichain(v)
        }
        Formula::Eventually(g) => {
            let mut v = expand(g, a);
            v.push(single(f));
            antichain(v)
        }
    }
}

fn expand_all(s: &Obligations, a: &Symbol) -> Vec<Obligations> {
    s.iter()
        .fold(vec![Obligations::new()], |acc, f| product(&acc, &expand(f, a)))
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Key {
    Subset(Vec<Obligations>),
    Done,
}

/// Compiles a formula into a DFA accepting exactly its minimal good
/// prefixes over `alphabet`.
///
/// Locations are sets of obligation sets: each obligation set is a state of
/// the underlying NFA, built by one-step expansion of the formula. A location
/// is accepting when one of its obligation sets can be met by the empty
/// suffix. Accepting locations move to a rejecting `done` location on every
/// letter, so that the accepted words are the shortest informative prefixes
/// and bounded satisfaction is "some prefix is accepted".
pub fn compile_scltl(f: &Formula, alphabet: &[PropSet]) -> Result<Dfa, SpecError> {
    let letters: Vec<Symbol> = alphabet.iter().cloned().map(Symbol::Letter).collect();
    if letters.is_empty() || letters.iter().collect::<BTreeSet<_>>().len() != letters.len() {
        return Err(SpecError::InvalidAlphabet);
    }
    let accepting_key = |k: &Key| match k {
        Key::Subset(v) => v.iter().any(|s| s.iter().all(nullable)),
        Key::Done => false,
    };
    let start = Key::Subset(vec![single(f)]);
    let mut index: BTreeMap<Key, usize> = BTreeMap::new();
    let mut keys: Vec<Key> = Vec::new();
    let mut queue = VecDeque::new();
    let mut intern = |k: Key, keys: &mut Vec<Key>, queue: &mut VecDeque<usize>| {
        if let Some(&i) = index.get(&k) {
            return Ok(i);
        }
        if keys.len() >= MAX_LOCATIONS {
            return Err(SpecError::StateBlowup(MAX_LOCATIONS));
        }
        let i = keys.len();
        index.insert(k.clone(), i);
        keys.push(k);
        queue.push_back(i);
        Ok(i)
    };
    intern(start, &mut keys, &mut queue)?;
    let mut trans: Vec<Vec<usize>> = Vec::new();
    while let Some(i) = queue.pop_front() {
        let key = keys[i].clone();
        let row = if accepting_key(&key) || key == Key::Done {
            let done = intern(Key::Done, &mut keys, &mut queue)?;
            vec![done; letters.len()]
        } else {
            let Key::Subset(alts) = &key else { unreachable!() };
            let mut row = Vec::with_capacity(letters.len());
            for a in &letters {
                let next = antichain(alts.iter().flat_map(|s| expand_all(s, a)).collect());
                row.push(intern(Key::Subset(next), &mut keys, &mut queue)?);
            }
            row
        };
        if trans.len() <= i {
            trans.resize(i + 1, Vec::new());
        }
        trans[i] = row;
    }
    let accepting: Vec<bool> = keys.iter().map(accepting_key).collect();
    let names = keys
        .iter()
        .enumerate()
        .map(|(i, k)| match k {
            Key::Done => "done".to_string(),
            Key::Subset(v) if v.is_empty() => "sink".to_string(),
            _ => format!("q{i}"),
        })
        .collect();
    Dfa::new(letters, names, 0, accepting, trans)
}

/// Adds the fresh letter `φ∘` and an absorbing, rejecting location that every
/// location enters on `φ∘`.
pub fn absorb_dfa(dfa: &Dfa) -> Result<Dfa, SpecError> {
    if dfa.alphabet.contains(&Symbol::Fresh) {
        return Err(SpecError::LetterClash);
    }
    let abs = dfa.num_locations();
    let mut alphabet = dfa.alphabet.clone();
    alphabet.push(Symbol::Fresh);
    let mut trans: Vec<Vec<usize>> = dfa
        .trans
        .iter()
        .map(|row| {
            let mut r = row.clone();
            r.push(abs);
            r
        })
        .collect();
    trans.push(vec![abs; alphabet.len()]);
    let mut names = dfa.names.clone();
    names.push("q_abs".into());
    let mut accepting = dfa.accepting.clone();
    accepting.push(false);
    Dfa::new(alphabet, names, dfa.initial, accepting, trans)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::speclang::parse_scltl;

    fn letter(props: &[&str]) -> PropSet {
        props.iter().map(|s| s.to_string()).collect()
    }

    // a = {A}, b = {B}, c = ∅
    fn abc() -> Vec<PropSet> {
        vec![letter(&["A"]), letter(&["B"]), letter(&[])]
    }

    fn sym(c: char) -> Symbol {
        match c {
            'a' => Symbol::of(["A"]),
            'b' => Symbol::of(["B"]),
            _ => Symbol::of([]),
        }
    }

    fn word(s: &str) -> Vec<Symbol> {
        s.chars().map(sym).collect()
    }

    /// q0 loops on a, moves to q2 on b and to q1 on c; q2 is accepting and
    /// leaves on every letter to q3; q1 and q3 absorb.
    fn hand_coded() -> Dfa {
        Dfa::new(
            abc().into_iter().map(Symbol::Letter).collect(),
            ["q0", "q1", "q2", "q3"].map(String::from).to_vec(),
            0,
            vec![false, false, true, false],
            vec![vec![0, 2, 1], vec![1, 1, 1], vec![3, 3, 3], vec![3, 3, 3]],
        )
        .unwrap()
    }

    #[test]
    fn until_matches_hand_coded_automaton() {
        let d = compile_scltl(&parse_scltl("A U B").unwrap(), &abc()).unwrap();
        assert_eq!(d.num_locations(), 4);
        assert!(d.isomorphic(&hand_coded()));
        assert!(d.minimized().isomorphic(&hand_coded().minimized()));
        assert_eq!(d.step(d.initial(), &sym('a')).unwrap(), d.initial());
    }

    #[test]
    fn single_atom() {
        let d = compile_scltl(&Formula::atom("B"), &abc()).unwrap();
        let non_sink = (0..d.num_locations()).filter(|&q| !d.is_sink(q)).count();
        assert_eq!(non_sink, 2);
        assert!(d.run_word(&word("b")).unwrap());
        assert!(!d.run_word(&word("ab")).unwrap());
    }

    #[test]
    fn run_word_examples() {
        let d = hand_coded();
        assert!(d.run_word(&word("aab")).unwrap());
        assert!(!d.run_word(&word("caab")).unwrap());
        assert!(!d.run_word(&[]).unwrap());
        assert!(matches!(
            d.run_word(&[Symbol::Fresh]),
            Err(SpecError::UnknownLetter(_))
        ));
        let t = compile_scltl(&Formula::True, &abc()).unwrap();
        assert!(t.run_word(&[]).unwrap());
    }

    #[test]
    fn bounded_acceptance() {
        let d = hand_coded();
        assert!(d.accepts_within(&word("aabcc"), 2).unwrap());
        assert!(!d.accepts_within(&word("aaab"), 2).unwrap());
        let multi: Vec<Vec<Symbol>> = vec![vec![sym('a')], vec![sym('c'), sym('b')]];
        assert!(d.accepts_within_any(&multi, 5).unwrap());
        assert!(!d.accepts_within_any(&multi[..1], 5).unwrap());
    }

    #[test]
    fn absorbing_location() {
        let d = absorb_dfa(&hand_coded()).unwrap();
        assert_eq!(d.num_locations(), 5);
        assert_eq!(d.accepting(), vec![2]);
        let abs = 4;
        for q in 0..5 {
            assert_eq!(d.step(q, &Symbol::Fresh).unwrap(), abs);
        }
        assert!(d.is_sink(abs));
        assert!(matches!(absorb_dfa(&d), Err(SpecError::LetterClash)));

        let one = Dfa::new(vec![sym('a')], vec!["q".into()], 0, vec![true], vec![vec![0]]).unwrap();
        let one_abs = absorb_dfa(&one).unwrap();
        assert_eq!(one_abs.num_locations(), 2);
        assert!(one_abs.is_accepting(0));
    }

    #[test]
    fn powerset_and_errors() {
        let ap: BTreeSet<String> = ["A", "B"].map(String::from).into();
        assert_eq!(powerset_alphabet(&ap).unwrap().len(), 4);
        assert!(matches!(
            compile_scltl(&Formula::True, &[]),
            Err(SpecError::InvalidAlphabet)
        ));
        assert!(Dfa::new(vec![sym('a')], vec!["q".into()], 0, vec![false], vec![vec![1]]).is_err());
    }

    #[test]
    fn bounded_always_reach_is_small() {
        let f = parse_scltl("G[0,10] (S & !O) & F T1 & F T2").unwrap();
        let ap = f.atoms();
        let d = compile_scltl(&f, &powerset_alphabet(&ap).unwrap()).unwrap();
        assert!(d.num_locations() < 200);
        let good = Symbol::of(["S"]);
        let mut w = vec![good.clone(); 3];
        w.push(Symbol::of(["S", "T1"]));
        w.extend(vec![good.clone(); 3]);
        w.push(Symbol::of(["S", "T2"]));
        w.extend(vec![good; 3]);
        assert_eq!(w.len(), 11);
        assert!(d.accepts_within(&w, 10).unwrap());
        assert!(!d.accepts_within(&w[..10], 10).unwrap());
        w[5] = Symbol::of(["S", "O"]);
        assert!(!d.accepts_within(&w, 10).unwrap());
    }

    #[test]
    fn dot_export() {
        let dot = hand_coded().to_dot();
        assert!(dot.starts_with("digraph"));
        assert!(dot.contains("q2 [label=\"q2\", shape=doublecircle]"));
        assert!(dot.contains("q1 -> q1 [label=\"*\"]"));
    }
}
