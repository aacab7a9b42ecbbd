use mdl_relu::model::sample_true_param;
use mdl_relu::risk::{run_trials, thm3_rhs, RenyiEvaluator, TrialSetup};
use mdl_relu::rng::seeded;
use mdl_relu::spectral::{approx_basis, exact_spectrum, gram_report, monte_carlo_fim, monte_carlo_trace};
use mdl_relu::{CodedBasis, Method, NetworkModel};

fn relu_setup(seed: u64) -> (NetworkModel, mdl_relu::TrueParam, CodedBasis) {
    let model = NetworkModel::sample(2, 500, 1.0, seed).unwrap();
    let vstar = sample_true_param(500, &mut seeded(seed ^ 0xabc)).unwrap();
    let ab = approx_basis(&model).unwrap();
    let gr = gram_report(&ab).unwrap();
    (model, vstar, CodedBasis::from_approx(&ab, &gr))
}

#[test]
fn error_and_risk_shrink_with_n_on_paired_seeds() {
    let (model, vstar, basis) = relu_setup(31);
    let eval = RenyiEvaluator::new(&model, 10_000, 5).unwrap();
    let run = |n| {
        let setup = TrialSetup { model: &model, vstar: &vstar, basis: &basis, alpha: 2.0, n, method: Method::Auto };
        run_trials(&setup, 100, 77, Some((&eval, 0.5))).unwrap()
    };
    let small = run(100);
    let large = run(10_000);
    let err_wins = small.iter().zip(&large).filter(|(s, l)| l.error_norm < s.error_norm).count();
    let risk_wins = small.iter().zip(&large).filter(|(s, l)| l.risk.unwrap() < s.risk.unwrap()).count();
    assert!(err_wins >= 90, "error shrank in {err_wins}/100");
    assert!(risk_wins >= 90, "risk shrank in {risk_wins}/100");
}

#[test]
fn redundancy_below_theorem_scale_bound() {
    let (model, vstar, basis) = relu_setup(32);
    let trace = monte_carlo_trace(&model, 50_000, 1).unwrap();
    let setup = TrialSetup { model: &model, vstar: &vstar, basis: &basis, alpha: 2.0, n: 1000, method: Method::Auto };
    let red = mdl_relu::risk::empirical_redundancy(&setup, 200, 3).unwrap();
    let bound = thm3_rhs(&basis.lambdas, trace, 2.0, 1.0, 1000, basis.eps1).unwrap();
    assert!(red.mean + 3.0 * red.se >= 0.0);
    assert!(red.mean <= bound.total * 1000.0, "{} > {}", red.mean, bound.total * 1000.0);
}

#[test]
fn exact_eigenbasis_code_end_to_end() {
    let model = NetworkModel::sample(2, 60, 1.0, 9).unwrap();
    let fim = monte_carlo_fim(&model, 50_000, 2).unwrap();
    let spectrum = exact_spectrum(&fim).unwrap();
    let basis = CodedBasis::from_spectrum(&spectrum, 5).unwrap();
    assert_eq!(basis.radius, 1.0);
    let vstar = sample_true_param(60, &mut seeded(4)).unwrap();
    let eval = RenyiEvaluator::new(&model, 5_000, 6).unwrap();
    let setup = TrialSetup { model: &model, vstar: &vstar, basis: &basis, alpha: 2.0, n: 500, method: Method::Auto };
    let p = mdl_relu::risk::paired_with(&setup, &eval, 0.5, 50, 8).unwrap();
    let cor1 = mdl_relu::risk::cor1_rhs(&basis.lambdas, spectrum.trace, 60, 2.0, 1.0, 500).unwrap();
    assert!(p.risk_within_redundancy(3.0));
    assert!(p.risk.mean <= cor1.total);
    assert!(!cor1.beta_clipped);
}
