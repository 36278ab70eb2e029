//! Bookkeeping of relation sets along nested accumulation points, and the
//! walk on `N^2` that bounds how long such a nesting can grow.
//!
//! A state holds `l` simple relations and `m` polynomial ones. New simple
//! relations are `F0` steps `(l, m) -> (l + 1, m)`, a new polynomial relation
//! is `F1: (l, m) -> (l, m + 1)`, and two new simple relations with the
//! polynomial ones dropped are `F2: (l, m) -> (l + 2, 0)`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::algebra::{BracketWord, Letter};
use crate::error::{Error, Result};
use crate::relations::expr::{build_q, RelPoly};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Step {
    F0,
    F1,
    F2,
}

impl Step {
    pub fn apply(self, (x1, x2): (u32, u32)) -> (u32, u32) {
        match self {
            Step::F0 => (x1 + 1, x2),
            Step::F1 => (x1, x2 + 1),
            Step::F2 => (x1 + 2, 0),
        }
    }
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Step::F0 => "F0",
            Step::F1 => "F1",
            Step::F2 => "F2",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    /// Last two words are `I` and `sI` with `s` one of `+`, `-`.
    Jets,
    /// Last two words are `0J` and `1J` for a word `J` listed earlier.
    Codim,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationState {
    pub simple: Vec<BracketWord>,
    pub polynomial: usize,
    pub phase: Phase,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Branch {
    pub step: Step,
    pub state: RelationState,
    /// Simple relations added by this branch.
    pub added: Vec<BracketWord>,
    /// Index `r` of the polynomial relation `Q_r` added, for `F1`.
    pub added_q: Option<usize>,
}

fn w(s: &str) -> BracketWord {
    s.parse().expect("static word")
}

impl RelationState {
    /// `S1 = S01 = S+01 = 0`: the relations holding on the switching set.
    pub fn initial() -> Self {
        RelationState {
            simple: vec![w("1"), w("01"), w("+01")],
            polynomial: 0,
            phase: Phase::Jets,
        }
    }

    /// `(l, m)` on the walk.
    pub fn point(&self) -> (u32, u32) {
        (self.simple.len() as u32, self.polynomial as u32)
    }

    fn last_two(&self) -> Result<(&BracketWord, &BracketWord)> {
        match self.simple.as_slice() {
            [.., a, b] => Ok((a, b)),
            _ => Err(malformed("fewer than two simple relations")),
        }
    }

    /// Sign `s` with `last = s prev` in the jets regime.
    fn jets_sign(&self) -> Result<Letter> {
        let (prev, last) = self.last_two()?;
        match last.letters().split_first() {
            Some((&s @ (Letter::Plus | Letter::Minus), rest)) if rest == prev.letters() => Ok(s),
            _ => Err(malformed(format!("`{last}` is not `+{prev}` or `-{prev}`"))),
        }
    }

    /// `J` with the last two words `0J`, `1J` and `J` listed before them.
    fn codim_root(&self) -> Result<BracketWord> {
        let (a, b) = self.last_two()?;
        let (Some(ja), Some(jb)) = (a.tail(), b.tail()) else {
            return Err(malformed("single-letter words in the codimension regime"));
        };
        let ok = a.letters()[0] == Letter::Zero && b.letters()[0] == Letter::One && ja == jb;
        if !ok {
            return Err(malformed(format!("`{a}`, `{b}` are not of the form 0J, 1J")));
        }
        if !self.simple[..self.simple.len() - 2].contains(&ja) {
            return Err(malformed(format!("`{ja}` does not precede `{a}`, `{b}`")));
        }
        Ok(ja)
    }

    /// Words `I_(l-1)`, `I_l` entering the `Q_r` of a codimension state.
    pub fn q_pair(&self) -> Result<(BracketWord, BracketWord)> {
        self.codim_root()?;
        let (a, b) = self.last_two()?;
        Ok((a.clone(), b.clone()))
    }

    /// `Q_r` for this state's pair; only meaningful in the codimension regime.
    pub fn q_relation(&self, r: usize) -> Result<RelPoly> {
        let (a, b) = self.q_pair()?;
        build_q(r, &a, &b)
    }

    pub fn validate(&self) -> Result<()> {
        match self.phase {
            Phase::Jets if self.polynomial > 0 => {
                Err(malformed("polynomial relations in the jets regime"))
            }
            Phase::Jets => self.jets_sign().map(|_| ()),
            Phase::Codim => self.codim_root().map(|_| ()),
        }
    }
}

fn malformed(msg: impl Into<String>) -> Error {
    Error::InvalidInput(format!("malformed relation state: {}", msg.into()))
}

/// Successor relation sets at the next accumulation level.
///
/// From `(.., I, sI)` in the jets regime: `S(+sI)` or `S(-sI)` stay in the
/// regime with the new last pair, while `S(-s I)` together with `S(sI)` is
/// equivalent to `S(0I) = S(1I) = 0`, giving the codimension regime. From
/// `(.., 0J, 1J)` with `h` polynomial relations: either `Q_(h+1)` is added,
/// or `S(0 1J)` and `S(1 1J)` are, which drops the `Q`s.
pub fn accumulation_branches(state: &RelationState) -> Result<Vec<Branch>> {
    state.validate()?;
    let mut out = Vec::new();
    match state.phase {
        Phase::Jets => {
            let s = state.jets_sign()?;
            let (prev, last) = state.last_two()?;
            for sign in [Letter::Plus, Letter::Minus] {
                let word = last.prepend(sign);
                let mut next = state.clone();
                next.simple.push(word.clone());
                out.push(Branch {
                    step: Step::F0,
                    state: next,
                    added: vec![word],
                    added_q: None,
                });
            }
            let opposite = if s == Letter::Plus { Letter::Minus } else { Letter::Plus };
            let mut simple = state.simple[..state.simple.len() - 1].to_vec();
            simple.push(prev.prepend(Letter::Zero));
            simple.push(prev.prepend(Letter::One));
            out.push(Branch {
                step: Step::F0,
                state: RelationState {
                    simple,
                    polynomial: 0,
                    phase: Phase::Codim,
                },
                added: vec![prev.prepend(opposite)],
                added_q: None,
            });
        }
        Phase::Codim => {
            let mut with_q = state.clone();
            with_q.polynomial += 1;
            out.push(Branch {
                step: Step::F1,
                state: with_q,
                added: vec![],
                added_q: Some(state.polynomial + 1),
            });
            let (_, last) = state.last_two()?;
            let pair = [last.prepend(Letter::Zero), last.prepend(Letter::One)];
            let mut simple = state.simple.clone();
            simple.extend(pair.iter().cloned());
            out.push(Branch {
                step: Step::F2,
                state: RelationState {
                    simple,
                    polynomial: 0,
                    phase: Phase::Codim,
                },
                added: pair.to_vec(),
                added_q: None,
            });
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LongestCurve {
    pub n: usize,
    pub length: usize,
    pub witness: Vec<Step>,
    /// Points visited, starting at `(3, 0)`.
    pub path: Vec<(u32, u32)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Stage {
    Start,
    Prefix,
    Tail,
}

impl Stage {
    fn moves(self) -> &'static [(Step, Stage)] {
        match self {
            Stage::Start => &[(Step::F0, Stage::Prefix)],
            Stage::Prefix => &[
                (Step::F0, Stage::Prefix),
                (Step::F1, Stage::Tail),
                (Step::F2, Stage::Tail),
            ],
            Stage::Tail => &[(Step::F1, Stage::Tail), (Step::F2, Stage::Tail)],
        }
    }
}

pub const START: (u32, u32) = (3, 0);

pub fn in_triangle((x1, x2): (u32, u32), n: usize) -> bool {
    (x1 + x2) as usize <= 2 * n - 1
}

/// Longest admissible curve from `(3, 0)` staying in
/// `x1 + x2 <= 2n - 1`: some `F0` steps (at least one) followed by `F1`
/// and `F2` steps only. Exhaustive memoised search; `x1 (2n) + x2` grows
/// with every step, so the state graph has no cycles.
pub fn longest_admissible(n: usize) -> Result<LongestCurve> {
    if n < 2 {
        return Err(Error::InvalidInput(format!("need n >= 2, got {n}")));
    }
    let mut memo = std::collections::HashMap::new();
    let (length, _) = best_from(START, Stage::Start, n, &mut memo);
    let mut witness = Vec::with_capacity(length);
    let mut path = vec![START];
    let (mut p, mut stage) = (START, Stage::Start);
    while let Some(&(len, Some((step, next)))) = memo.get(&(p, stage)) {
        if len == 0 {
            break;
        }
        witness.push(step);
        p = step.apply(p);
        stage = next;
        path.push(p);
    }
    debug_assert_eq!(witness.len(), length);
    Ok(LongestCurve {
        n,
        length,
        witness,
        path,
    })
}

type Memo = std::collections::HashMap<((u32, u32), Stage), (usize, Option<(Step, Stage)>)>;

fn best_from(p: (u32, u32), stage: Stage, n: usize, memo: &mut Memo) -> (usize, Option<(Step, Stage)>) {
    if let Some(&v) = memo.get(&(p, stage)) {
        return v;
    }
    let mut best = (0, None);
    for &(step, next) in stage.moves() {
        let q = step.apply(p);
        if !in_triangle(q, n) {
            continue;
        }
        let (len, _) = best_from(q, next, n, memo);
        if len + 1 > best.0 {
            best = (len + 1, Some((step, next)));
        }
    }
    memo.insert((p, stage), best);
    best
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct FullerBound {
    pub n: usize,
    pub longest: usize,
    pub k: usize,
    pub total: usize,
}

/// `K = 1 + longest`, and `K + n - 2` for the order bound once the
/// collinear part is added.
pub fn fuller_bound(n: usize) -> Result<FullerBound> {
    let longest = longest_admissible(n)?.length;
    let k = 1 + longest;
    let total = k + n - 2;
    assert_eq!(total, (n - 1) * (n - 1), "walk bound disagrees with (n-1)^2 at n = {n}");
    Ok(FullerBound {
        n,
        longest,
        k,
        total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_cases() {
        assert_eq!(longest_admissible(2).unwrap().length, 0);
        let c = longest_admissible(3).unwrap();
        assert_eq!(c.length, 2);
        assert_eq!(c.witness[0], Step::F0);
        assert!(longest_admissible(1).is_err());
    }

    #[test]
    fn walk_matches_closed_form() {
        for n in 2..=10 {
            let c = longest_admissible(n).unwrap();
            assert_eq!(c.length, (n - 2) * (n - 1), "n = {n}");
            let b = fuller_bound(n).unwrap();
            assert_eq!(b.total, (n - 1) * (n - 1));
        }
        assert_eq!(fuller_bound(3).unwrap().k, 3);
        assert_eq!(fuller_bound(5).unwrap().total, 16);
    }

    #[test]
    fn witness_stays_inside_and_is_maximal() {
        for n in 2..=10 {
            let c = longest_admissible(n).unwrap();
            let mut p = START;
            for (i, s) in c.witness.iter().enumerate() {
                if i == 0 {
                    assert_eq!(*s, Step::F0);
                }
                p = s.apply(p);
                assert!(in_triangle(p, n));
                assert_eq!(p, c.path[i + 1]);
            }
            let tail = c.witness.iter().any(|s| *s != Step::F0);
            let allowed: &[Step] = match (c.witness.is_empty(), tail) {
                (true, _) => &[Step::F0],
                (false, false) => &[Step::F0, Step::F1, Step::F2],
                (false, true) => &[Step::F1, Step::F2],
            };
            for s in allowed {
                assert!(!in_triangle(s.apply(p), n), "n = {n} can continue with {s}");
            }
        }
    }

    #[test]
    fn initial_branches() {
        let b = accumulation_branches(&RelationState::initial()).unwrap();
        assert_eq!(b.len(), 3);
        let added: Vec<String> = b.iter().map(|b| b.added[0].to_string()).collect();
        assert_eq!(added, ["++01", "-+01", "-01"]);
        assert!(b.iter().all(|b| b.step == Step::F0 && b.state.point() == (4, 0)));
        assert_eq!(b[2].state.phase, Phase::Codim);
        assert_eq!(
            b[2].state.simple.iter().map(|w| w.to_string()).collect::<Vec<_>>(),
            ["1", "01", "001", "101"]
        );
    }

    #[test]
    fn codim_branches() {
        let start = accumulation_branches(&RelationState::initial()).unwrap();
        let codim = &start[2].state;
        let b = accumulation_branches(codim).unwrap();
        assert_eq!(b.len(), 2);
        assert_eq!(b[0].step, Step::F1);
        assert_eq!(b[0].state.point(), (4, 1));
        assert_eq!(b[1].step, Step::F2);
        assert_eq!(b[1].state.point(), (6, 0));
        assert_eq!(b[1].added[0].to_string(), "0101");
        assert!(b[1].state.validate().is_ok());
        let q1 = codim.q_relation(1).unwrap();
        assert!(!q1.is_zero());
    }

    #[test]
    fn malformed_states() {
        let mut s = RelationState::initial();
        s.simple.pop();
        assert!(accumulation_branches(&s).is_err());
        s.phase = Phase::Codim;
        assert!(accumulation_branches(&s).is_err());
        let mut j = RelationState::initial();
        j.polynomial = 1;
        assert!(accumulation_branches(&j).is_err());
    }

    #[test]
    fn witness_replays_through_branches() {
        for n in 3..=8 {
            let c = longest_admissible(n).unwrap();
            let mut state = RelationState::initial();
            for (i, step) in c.witness.iter().enumerate() {
                let branches = accumulation_branches(&state).unwrap();
                let next_is_f0 = c.witness.get(i + 1) == Some(&Step::F0);
                let pick = branches
                    .into_iter()
                    .filter(|b| b.step == *step)
                    .find(|b| *step != Step::F0 || (b.state.phase == Phase::Jets) == next_is_f0)
                    .unwrap();
                state = pick.state;
                assert_eq!(state.point(), c.path[i + 1]);
            }
        }
    }
}
