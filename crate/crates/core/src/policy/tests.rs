use super::*;

fn exp(rate: f64) -> DistributionSpec<f64> {
    DistributionSpec::exponential(rate).unwrap()
}

fn model(alpha: f64, beta: f64) -> PolicyModel<f64> {
    PolicyModel::new(
        exp(0.5),
        exp(10.0),
        HmmParams::new(alpha, beta).unwrap(),
        None,
        BaselineLlrMode::StationaryMixture,
    )
}

fn gated(p0: f64, delay_counter: usize, gamma: f64, cost: f64) -> Policy<f64> {
    let mut config = PolicyConfig::new(PolicyKind::AdhmP, 5, 2, cost);
    config.p_th = 0.7;
    config.gamma = gamma;
    let mut state = PolicyState::initial(5, p0);
    state.delay_counter = delay_counter;
    Policy::from_state(config, model(0.1, 0.1), state, 0).unwrap()
}

#[test]
fn informative_belief_probes() {
    let p = gated(0.2, 0, 0.0, 0.01);
    assert!(matches!(p.pending(), Action::Probe(cells) if cells.len() == 2));
    assert_eq!(p.state().delay_counter, 0);
}

#[test]
fn uninformative_belief_skips_and_counts() {
    let p = gated(0.9, 0, 0.0, 0.01);
    assert_eq!(p.pending(), &Action::Skip);
    assert_eq!(p.state().delay_counter, 1);
}

#[test]
fn overdue_sampling_is_forced() {
    let p = gated(0.9, 1, 0.01, 0.005);
    assert!(matches!(p.pending(), Action::Probe(_)));
    assert_eq!(p.state().delay_counter, 0);
}

#[test]
fn skip_holds_sums_and_predicts_belief() {
    let mut p = gated(0.9, 0, 0.0, 0.01);
    let mut state = p.state().clone();
    state.sums = vec![0.3, -0.2, 0.0, 1.1, 0.5];
    p = Policy::from_state(p.config().clone(), p.model().clone(), state, 0).unwrap();
    let before = p.state().sums.clone();
    let decision = p.step(&[], None).unwrap();
    assert!(!decision.is_stopped());
    assert_eq!(p.state().sums, before);
    assert!((p.state().belief_p0 - 0.82).abs() < 1e-15);
    assert_eq!((p.state().idle, p.state().samples), (1, 0));
}

#[test]
fn stop_and_continue_at_unit_threshold() {
    let config = PolicyConfig::new(PolicyKind::Adhm, 2, 2, (-1.0f64).exp());
    let mut state = PolicyState::initial(2, 0.5);
    state.sums = vec![1.5, 0.4];
    let mut p = Policy::from_state(config.clone(), model(0.1, 0.1), state.clone(), 0).unwrap();
    // r = 1 would zero the LLRs; instead feed values that add ~nothing
    let obs = [(0, 1e3), (1, 1e3)];
    let d = p.step(&obs, None).unwrap();
    assert!(p.state().sums[0] - p.state().sums[1] >= 1.0);
    assert_eq!(d, StepDecision::Stop { declared: 0 });

    state.sums = vec![1.5, 0.6];
    let mut q = Policy::from_state(config, model(0.1, 0.1), state, 0).unwrap();
    // observation far in the tail: LLR is ln r for both cells, which cancel
    let d = q.step(&[(0, 1e3), (1, 1e3)], None).unwrap();
    assert_eq!(d, StepDecision::Continue(Action::Probe(vec![0, 1])));
}

#[test]
fn mismatched_observations_are_rejected() {
    let config = PolicyConfig::new(PolicyKind::Adhm, 3, 2, 0.01);
    let mut p = Policy::new(config, model(0.2, 0.2), 1).unwrap();
    assert_eq!(p.pending(), &Action::Probe(vec![0, 1]));
    assert!(p.step(&[(1, 0.1), (0, 0.1)], None).is_err());
    assert!(p.step(&[(0, 0.1)], None).is_err());
    assert!(p.step(&[], None).is_err());
    assert!(p.step(&[(0, 0.1), (1, 0.1)], None).is_ok());
}

#[test]
fn invalid_configs_are_rejected() {
    for (cells, probes, cost) in [(1, 1, 0.1), (3, 0, 0.1), (3, 4, 0.1), (3, 2, 0.0), (3, 2, 1.0)] {
        let config = PolicyConfig::new(PolicyKind::Dgf, cells, probes, cost);
        assert!(config.validate().is_err(), "{cells} {probes} {cost}");
    }
    let mut config = PolicyConfig::new(PolicyKind::AdhmP, 3, 2, 0.1);
    config.p_th = 1.5;
    assert!(config.validate().is_err());
    let oracle = PolicyConfig::new(PolicyKind::AdhmOracle, 3, 2, 0.1);
    assert!(Policy::new(oracle, model(0.1, 0.1), 0).is_err());
}

fn oracle_model(levels: Vec<f64>, weights: Vec<f64>) -> PolicyModel<f64> {
    let palette = OraclePalette::new(levels, weights).unwrap();
    PolicyModel::new(
        exp(0.5),
        exp(10.0),
        HmmParams::new(0.1, 0.1).unwrap(),
        Some(palette),
        BaselineLlrMode::StationaryMixture,
    )
}

#[test]
fn oracle_requires_index_in_range() {
    let config = PolicyConfig::new(PolicyKind::AdhmOracle, 3, 2, 0.01);
    let mut p = Policy::new(config, oracle_model(vec![0.2, 0.6], vec![0.5, 0.5]), 0).unwrap();
    let obs = [(0, 0.1), (1, 0.1)];
    assert!(p.clone().step(&obs, None).is_err());
    assert!(p.clone().step(&obs, Some(2)).is_err());
    assert!(p.step(&obs, Some(1)).is_ok());
}

#[test]
fn oracle_with_unit_levels_adds_nothing() {
    let config = PolicyConfig::new(PolicyKind::AdhmOracle, 3, 2, 0.01);
    let mut p = Policy::new(config, oracle_model(vec![1.0], vec![1.0]), 0).unwrap();
    for y in [0.01, 0.5, 3.0] {
        let cells = match p.pending() {
            Action::Probe(c) => c.clone(),
            Action::Skip => unreachable!(),
        };
        let obs: Vec<_> = cells.iter().map(|&m| (m, y)).collect();
        p.step(&obs, Some(0)).unwrap();
    }
    assert!(p.state().sums.iter().all(|s| *s == 0.0));
}

#[test]
fn oracle_single_level_matches_frozen_belief() {
    // with α = 1 − β the next state ignores the current one, so the
    // predicted belief is β after every step
    let frozen = PolicyModel::new(
        exp(0.5),
        exp(10.0),
        HmmParams::new(0.7, 0.3).unwrap(),
        None,
        BaselineLlrMode::StationaryMixture,
    );
    let adhm_config = PolicyConfig::new(PolicyKind::Adhm, 3, 2, 0.01);
    let mut adhm = Policy::new(adhm_config, frozen, 0).unwrap();
    let oracle_config = PolicyConfig::new(PolicyKind::AdhmOracle, 3, 2, 0.01);
    let mut oracle = Policy::new(oracle_config, oracle_model(vec![0.3], vec![1.0]), 0).unwrap();
    let ys = [0.05, 2.0, 0.01, 0.3, 0.02, 0.07, 1.5];
    for (i, y) in ys.iter().cycle().take(60).enumerate() {
        assert_eq!(adhm.pending(), oracle.pending(), "step {i}");
        let Action::Probe(cells) = adhm.pending().clone() else { unreachable!() };
        let obs: Vec<_> = cells.iter().map(|&m| (m, *y * (1.0 + m as f64))).collect();
        let a = adhm.step(&obs, None).unwrap();
        let b = oracle.step(&obs, Some(0)).unwrap();
        assert_eq!(a, b);
        for (x, y) in adhm.state().sums.iter().zip(&oracle.state().sums) {
            assert!((x - y).abs() < 1e-12);
        }
        if a.is_stopped() {
            return;
        }
    }
}

#[test]
fn baseline_law_follows_mode() {
    let raw = PolicyModel::new(
        exp(0.5),
        exp(10.0),
        HmmParams::new(0.1, 0.3).unwrap(),
        None,
        BaselineLlrMode::RawG,
    );
    assert_eq!(raw.baseline, Law::Base(exp(10.0)));
    let mix = model(0.1, 0.3);
    let pi0 = mix.hmm.stationary_p0();
    assert!((pi0 - 0.75).abs() < 1e-15);
    assert_eq!(mix.baseline, Law::anomalous(pi0, &exp(0.5), &exp(10.0)));
}

#[test]
fn per_cell_beliefs_update_independently() {
    let mut config = PolicyConfig::new(PolicyKind::Adhm, 3, 1, 0.001);
    config.belief_source = BeliefSource::PerCell;
    let mut p = Policy::new(config, model(0.1, 0.1), 0).unwrap();
    assert_eq!(p.pending(), &Action::Probe(vec![0]));
    p.step(&[(0, 0.1)], None).unwrap();
    let b = &p.state().cell_beliefs;
    assert!((b[0] - 0.19159).abs() < 1e-5);
    assert_eq!(b[1], 0.5);
    assert_eq!(b[2], 0.5);
}
