//! Counterfactual regret minimization on Kuhn poker.
//!
//! Full-tree walks with alternating updates: odd iterations update player
//! 0's regrets and strategy sums, even iterations player 1's. Exploitability
//! comes from an exact best response over the six deals.

use std::collections::BTreeMap;
use std::path::Path;

use crate::dist::Categorical;
use crate::envs::kuhn::{history_string, is_terminal_history, legal_after, payoff, to_act, KuhnAction, CARD_NAMES};
use crate::error::{invalid, Result, RlError};
use crate::io::CsvTable;

/// The six ordered deals, each with probability 1/6.
pub const DEALS: [[u8; 2]; 6] = [[0, 1], [0, 2], [1, 0], [1, 2], [2, 0], [2, 1]];
const DEAL_PROB: f64 = 1.0 / 6.0;

/// Key of the information set of the player to act: own card, then history.
pub fn info_key(cards: [u8; 2], history: &[KuhnAction]) -> String {
    format!("{}{}", CARD_NAMES[cards[to_act(history)] as usize], history_string(history))
}

/// Strategy proportional to positive regret; uniform when none is positive.
pub fn regret_matching(regrets: &[f64]) -> Categorical {
    let pos: Vec<f64> = regrets.iter().map(|r| r.max(0.0)).collect();
    let total: f64 = pos.iter().sum();
    if total > 0.0 {
        Categorical::new(pos.iter().map(|p| p / total).collect()).expect("normalized")
    } else {
        Categorical::uniform(regrets.len())
    }
}

/// Normalized strategy sums; uniform when all are zero.
pub fn average_strategy(strategy_sum: &[f64]) -> Categorical {
    let total: f64 = strategy_sum.iter().sum();
    if total > 0.0 {
        Categorical::new(strategy_sum.iter().map(|s| s / total).collect()).expect("normalized")
    } else {
        Categorical::uniform(strategy_sum.len())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InfoSet {
    pub key: String,
    pub actions: Vec<KuhnAction>,
    pub cumulative_regret: Vec<f64>,
    /// Own-reach-weighted sum of the strategies played.
    pub strategy_sum: Vec<f64>,
    /// Strategy in force for the current iteration.
    playing: Vec<f64>,
}

impl InfoSet {
    fn new(key: String, actions: Vec<KuhnAction>) -> Self {
        let n = actions.len();
        Self {
            key,
            actions,
            cumulative_regret: vec![0.0; n],
            strategy_sum: vec![0.0; n],
            playing: vec![1.0 / n as f64; n],
        }
    }

    /// Regret-matching strategy for the next iteration.
    pub fn current_strategy(&self) -> Categorical {
        regret_matching(&self.cumulative_regret)
    }

    pub fn average_strategy(&self) -> Categorical {
        average_strategy(&self.strategy_sum)
    }
}

/// A behaviour strategy for both players, by information-set key.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyProfile {
    pub entries: BTreeMap<String, (Vec<KuhnAction>, Categorical)>,
}

impl StrategyProfile {
    /// Every information set of the game, each mapped through `f`.
    pub fn from_fn(mut f: impl FnMut(&str, &[KuhnAction]) -> Categorical) -> Self {
        let mut entries = BTreeMap::new();
        for cards in DEALS {
            visit_decisions(cards, &mut Vec::new(), &mut |key, actions| {
                entries
                    .entry(key.to_string())
                    .or_insert_with(|| (actions.to_vec(), f(key, actions)));
            });
        }
        Self { entries }
    }

    pub fn uniform() -> Self {
        Self::from_fn(|_, a| Categorical::uniform(a.len()))
    }

    /// Probability of `action` at `key`; 0 for unknown keys or actions.
    pub fn prob(&self, key: &str, action: KuhnAction) -> f64 {
        self.entries
            .get(key)
            .and_then(|(acts, dist)| acts.iter().position(|a| *a == action).map(|i| dist.probs()[i]))
            .unwrap_or(0.0)
    }

    fn strategy(&self, key: &str) -> Result<&(Vec<KuhnAction>, Categorical)> {
        match self.entries.get(key) {
            Some(e) => Ok(e),
            None => invalid(format!("profile has no entry for information set {key:?}")),
        }
    }

    pub fn to_csv(&self) -> CsvTable {
        let mut t = CsvTable::new(&["infoset_key", "action", "average_probability"]);
        for (key, (acts, dist)) in &self.entries {
            for (a, p) in acts.iter().zip(dist.probs()) {
                t.push([key.clone(), format!("{a:?}").to_lowercase(), format!("{p:.9}")]);
            }
        }
        t
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.to_csv().save(path)
    }

    /// Reads the format written by [`StrategyProfile::to_csv`]. Every
    /// information set of the game must be present.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rows: BTreeMap<String, Vec<(KuhnAction, f64)>> = BTreeMap::new();
        for (n, line) in text.lines().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            let [key, action, p] = fields[..] else {
                return Err(RlError::Parse(format!("line {}: expected 3 fields", n + 1)));
            };
            let action = KuhnAction::ALL
                .into_iter()
                .find(|a| format!("{a:?}").to_lowercase() == action)
                .ok_or_else(|| RlError::Parse(format!("line {}: unknown action {action:?}", n + 1)))?;
            let p: f64 = p
                .parse()
                .map_err(|_| RlError::Parse(format!("line {}: bad probability {p:?}", n + 1)))?;
            rows.entry(key.to_string()).or_default().push((action, p));
        }
        let mut missing = None;
        let profile = Self::from_fn(|key, actions| {
            let probs: Option<Vec<f64>> = actions
                .iter()
                .map(|a| rows.get(key).and_then(|r| r.iter().find(|(b, _)| b == a)).map(|(_, p)| *p))
                .collect();
            match probs.and_then(|p| Categorical::from_weights(&p).ok()) {
                Some(d) => d,
                None => {
                    missing.get_or_insert_with(|| key.to_string());
                    Categorical::uniform(actions.len())
                }
            }
        });
        match missing {
            Some(key) => Err(RlError::Parse(format!("no valid strategy for information set {key:?}"))),
            None => Ok(profile),
        }
    }
}

fn visit_decisions(cards: [u8; 2], history: &mut Vec<KuhnAction>, f: &mut dyn FnMut(&str, &[KuhnAction])) {
    if is_terminal_history(history) {
        return;
    }
    let actions = legal_after(history);
    f(&info_key(cards, history), &actions);
    for a in actions {
        history.push(a);
        visit_decisions(cards, history, f);
        history.pop();
    }
}

/// Expected chips per hand for player 0 when both follow `profile`.
pub fn expected_value(profile: &StrategyProfile) -> Result<f64> {
    fn walk(p: &StrategyProfile, cards: [u8; 2], h: &mut Vec<KuhnAction>) -> Result<f64> {
        if is_terminal_history(h) {
            return Ok(payoff(cards, h));
        }
        let (acts, dist) = p.strategy(&info_key(cards, h))?.clone();
        let mut v = 0.0;
        for (a, q) in acts.iter().zip(dist.probs()) {
            h.push(*a);
            v += q * walk(p, cards, h)?;
            h.pop();
        }
        Ok(v)
    }
    let mut total = 0.0;
    for cards in DEALS {
        total += DEAL_PROB * walk(profile, cards, &mut Vec::new())?;
    }
    Ok(total)
}

/// Best-response value for `player` (0 or 1) against the other player's
/// part of `profile`, in chips per hand from `player`'s perspective.
pub fn best_response_value(profile: &StrategyProfile, player: usize) -> Result<f64> {
    // values[d] for deal d: sum over continuations of the opponent's
    // probabilities times the responder's payoff, under the responder's
    // best choices
    fn walk(p: &StrategyProfile, player: usize, h: &mut Vec<KuhnAction>) -> Result<[f64; 6]> {
        let mut out = [0.0; 6];
        if is_terminal_history(h) {
            for (d, cards) in DEALS.iter().enumerate() {
                let u = payoff(*cards, h);
                out[d] = if player == 0 { u } else { -u };
            }
            return Ok(out);
        }
        let actions = legal_after(h);
        let mut children = Vec::with_capacity(actions.len());
        for a in &actions {
            h.push(*a);
            children.push(walk(p, player, h)?);
            h.pop();
        }
        let actor = to_act(h);
        if actor == player {
            for card in 0..3u8 {
                let deals: Vec<usize> = (0..6).filter(|d| DEALS[*d][player] == card).collect();
                let best = (0..actions.len())
                    .max_by(|i, j| {
                        let vi: f64 = deals.iter().map(|d| children[*i][*d]).sum();
                        let vj: f64 = deals.iter().map(|d| children[*j][*d]).sum();
                        vi.total_cmp(&vj)
                    })
                    .expect("decision nodes have actions");
                for d in deals {
                    out[d] = children[best][d];
                }
            }
        } else {
            for (d, cards) in DEALS.iter().enumerate() {
                let (acts, dist) = p.strategy(&info_key(*cards, h))?;
                for (a, q) in acts.iter().zip(dist.probs()) {
                    let i = actions.iter().position(|x| x == a).expect("same legal actions");
                    out[d] += q * children[i][d];
                }
            }
        }
        Ok(out)
    }
    if player > 1 {
        return invalid(format!("Kuhn poker has players 0 and 1, not {player}"));
    }
    Ok(walk(profile, player, &mut Vec::new())?.iter().sum::<f64>() * DEAL_PROB)
}

/// Mean of the two best-response values; 0 exactly at a Nash equilibrium
/// and positive otherwise.
pub fn exploitability(profile: &StrategyProfile) -> Result<f64> {
    Ok(0.5 * (best_response_value(profile, 0)? + best_response_value(profile, 1)?))
}

#[derive(Debug, Clone, Default)]
pub struct CfrSolver {
    pub infosets: BTreeMap<String, InfoSet>,
    pub iterations: usize,
}

impl CfrSolver {
    pub fn new() -> Self {
        Self::default()
    }

    /// One alternating iteration; returns player 0's expected value under
    /// the strategies played in it.
    pub fn iterate(&mut self) -> f64 {
        self.iterations += 1;
        let traverser = (self.iterations + 1) % 2;
        let mut value = 0.0;
        for cards in DEALS {
            let v = self.traverse(cards, &mut Vec::new(), traverser, [1.0, 1.0]);
            value += DEAL_PROB * if traverser == 0 { v } else { -v };
        }
        // regrets from all six deals take effect together
        for info in self.infosets.values_mut() {
            info.playing = info.current_strategy().into_vec();
        }
        value
    }

    /// Counterfactual walk below one deal. Returns the traverser's expected
    /// payoff at this node under the current strategies.
    pub fn traverse(&mut self, cards: [u8; 2], history: &mut Vec<KuhnAction>, traverser: usize, reach: [f64; 2]) -> f64 {
        if is_terminal_history(history) {
            let u = payoff(cards, history);
            return if traverser == 0 { u } else { -u };
        }
        let actor = to_act(history);
        let key = info_key(cards, history);
        let actions = legal_after(history);
        let sigma = self
            .infosets
            .entry(key.clone())
            .or_insert_with(|| InfoSet::new(key.clone(), actions.clone()))
            .playing
            .clone();
        let mut utils = vec![0.0; actions.len()];
        let mut node = 0.0;
        for (i, a) in actions.iter().enumerate() {
            let mut next = reach;
            next[actor] *= sigma[i];
            history.push(*a);
            utils[i] = self.traverse(cards, history, traverser, next);
            history.pop();
            node += sigma[i] * utils[i];
        }
        if actor == traverser {
            let info = self.infosets.get_mut(&key).expect("inserted above");
            let cf_reach = DEAL_PROB * reach[1 - actor];
            for i in 0..actions.len() {
                info.cumulative_regret[i] += cf_reach * (utils[i] - node);
                info.strategy_sum[i] += reach[actor] * sigma[i];
            }
        }
        node
    }

    /// Average strategies; information sets not yet visited are uniform.
    pub fn average_profile(&self) -> StrategyProfile {
        StrategyProfile::from_fn(|key, actions| {
            self.infosets
                .get(key)
                .map_or_else(|| Categorical::uniform(actions.len()), InfoSet::average_strategy)
        })
    }
}

#[derive(Debug, Clone)]
pub struct CfrRun {
    pub profile: StrategyProfile,
    /// Player 0's expected value under the average profile.
    pub game_value: f64,
    pub exploitability: f64,
    /// `(iteration, exploitability of the average profile)`.
    pub trace: Vec<(usize, f64)>,
}

impl CfrRun {
    pub fn trace_csv(&self) -> CsvTable {
        let mut t = CsvTable::new(&["iteration", "exploitability"]);
        for (i, e) in &self.trace {
            t.push([i.to_string(), format!("{e:.9e}")]);
        }
        t
    }
}

/// Runs `iterations` CFR iterations, recording exploitability every
/// `trace_every` iterations (0 records only the end).
pub fn cfr_solve(iterations: usize, trace_every: usize) -> Result<CfrRun> {
    if iterations == 0 {
        return invalid("CFR needs at least one iteration");
    }
    let mut solver = CfrSolver::new();
    let mut trace = Vec::new();
    for it in 1..=iterations {
        solver.iterate();
        if (trace_every > 0 && it % trace_every == 0) || it == iterations {
            trace.push((it, exploitability(&solver.average_profile())?));
        }
    }
    let profile = solver.average_profile();
    Ok(CfrRun {
        game_value: expected_value(&profile)?,
        exploitability: trace.last().expect("final entry").1,
        profile,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use KuhnAction::*;

    #[test]
    fn profile_csv_round_trip() {
        let run = cfr_solve(200, 0).unwrap();
        let text = run.profile.to_csv().render();
        let back = StrategyProfile::from_csv(&text).unwrap();
        assert_eq!(back.to_csv().render(), text);
        assert!((exploitability(&back).unwrap() - run.exploitability).abs() < 1e-7);
        let truncated: String = text.lines().take(5).map(|l| format!("{l}\n")).collect();
        assert!(StrategyProfile::from_csv(&truncated).is_err());
        assert!(StrategyProfile::from_csv("h\nK,raise,1\n").is_err());
    }

    #[test]
    fn regret_matching_examples() {
        assert_eq!(regret_matching(&[2.0, 6.0, 0.0]).probs(), &[0.25, 0.75, 0.0]);
        assert_eq!(regret_matching(&[-1.0, -3.0]).probs(), &[0.5, 0.5]);
        assert_eq!(regret_matching(&[0.0, 4.0, -2.0]).probs(), &[0.0, 1.0, 0.0]);
        assert_eq!(average_strategy(&[1.0, 3.0]).probs(), &[0.25, 0.75]);
        assert_eq!(average_strategy(&[0.0, 0.0]).probs(), &[0.5, 0.5]);
    }

    #[test]
    fn twelve_information_sets() {
        let p = StrategyProfile::uniform();
        assert_eq!(p.entries.len(), 12);
        assert!(p.entries.contains_key("Kcb"));
        assert_eq!(p.prob("Qb", Call), 0.5);
    }

    #[test]
    fn payoffs_are_zero_sum_at_every_terminal() {
        for cards in DEALS {
            for h in [
                vec![Check, Check],
                vec![Bet, Call],
                vec![Bet, Fold],
                vec![Check, Bet, Call],
                vec![Check, Bet, Fold],
            ] {
                let u0 = payoff(cards, &h);
                let u1 = -payoff(cards, &h);
                assert_eq!(u0 + u1, 0.0);
                assert!(u0.abs() == 1.0 || u0.abs() == 2.0);
            }
        }
    }

    #[test]
    fn terminal_walk_changes_nothing() {
        let mut s = CfrSolver::new();
        let v = s.traverse([2, 0], &mut vec![Bet, Call], 0, [1.0, 1.0]);
        assert_eq!(v, 2.0);
        assert!(s.infosets.is_empty());
    }

    #[test]
    fn one_iteration_is_uniform() {
        let run = cfr_solve(1, 0).unwrap();
        for (key, (_, dist)) in &run.profile.entries {
            assert!(dist.probs().iter().all(|p| *p == 0.5), "{key}: {:?}", dist.probs());
        }
        let mut s = CfrSolver::new();
        let v = s.iterate();
        assert_eq!(v, expected_value(&StrategyProfile::uniform()).unwrap());
    }

    #[test]
    fn uniform_play_is_exploitable() {
        let e = exploitability(&StrategyProfile::uniform()).unwrap();
        assert!(e > 0.1, "{e}");
    }

    #[test]
    fn always_folding_forfeits_the_antes() {
        // both players check or fold whenever possible, never bet or call
        let passive = StrategyProfile::from_fn(|_, acts| {
            let i = acts.iter().position(|a| matches!(a, Check | Fold)).unwrap();
            Categorical::one_hot(acts.len(), i)
        });
        // player 0's best response bets every hand and collects the ante
        assert!((best_response_value(&passive, 0).unwrap() - 1.0).abs() < 1e-12);
        // player 1's best response bets after every check and collects it too
        assert!((best_response_value(&passive, 1).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn known_equilibrium_has_zero_exploitability() {
        // the equilibrium family with player 0's jack bluff at alpha
        for alpha in [0.0, 0.1, 1.0 / 3.0] {
            let p = nash(alpha);
            let e = exploitability(&p).unwrap();
            assert!(e.abs() < 1e-12, "alpha {alpha}: {e}");
            assert!((expected_value(&p).unwrap() + 1.0 / 18.0).abs() < 1e-12);
        }
        let mut off = nash(0.2);
        off.entries.get_mut("J").unwrap().1 = Categorical::new(vec![0.4, 0.6]).unwrap();
        assert!(exploitability(&off).unwrap() > 1e-3);
    }

    /// Textbook equilibrium for bluffing rate alpha in [0, 1/3].
    fn nash(alpha: f64) -> StrategyProfile {
        let bet = |p: f64| Categorical::new(vec![1.0 - p, p]).unwrap();
        StrategyProfile::from_fn(|key, _| match key {
            "J" => bet(alpha),
            "Q" => bet(0.0),
            "K" => bet(3.0 * alpha),
            // after check-bet the actions are call, fold
            "Jcb" => bet(1.0),
            "Qcb" => bet(2.0 / 3.0 - alpha),
            "Kcb" => bet(0.0),
            // responder: call/fold after a bet, check/bet after a check
            "Jb" => Categorical::new(vec![0.0, 1.0]).unwrap(),
            "Qb" => Categorical::new(vec![1.0 / 3.0, 2.0 / 3.0]).unwrap(),
            "Kb" => Categorical::new(vec![1.0, 0.0]).unwrap(),
            "Jc" => bet(1.0 / 3.0),
            "Qc" => bet(0.0),
            "Kc" => bet(1.0),
            k => panic!("unexpected key {k}"),
        })
    }

    #[test]
    fn solver_converges_and_is_deterministic() {
        let a = cfr_solve(2000, 500).unwrap();
        let b = cfr_solve(2000, 500).unwrap();
        assert_eq!(a.profile, b.profile);
        assert_eq!(a.trace.len(), 4);
        assert!(a.exploitability < 0.01, "{}", a.exploitability);
        assert!(a.trace.windows(2).all(|w| w[1].1 >= 0.0));
        assert_eq!(a.trace_csv().len(), 4);
        assert_eq!(a.profile.to_csv().len(), 24);
    }

    proptest! {
        #[test]
        fn regret_matching_is_a_distribution(r in proptest::collection::vec(-100.0f64..100.0, 1..6)) {
            let p = regret_matching(&r);
            prop_assert!((p.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(p.probs().iter().all(|x| *x >= 0.0));
        }

        #[test]
        fn exploitability_is_non_negative(raw in proptest::collection::vec(0.0f64..1.0, 12)) {
            let mut it = raw.into_iter();
            let p = StrategyProfile::from_fn(|_, _| {
                let q = it.next().unwrap();
                Categorical::new(vec![1.0 - q, q]).unwrap()
            });
            prop_assert!(exploitability(&p).unwrap() >= -1e-12);
        }
    }
}
