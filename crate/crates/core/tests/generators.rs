use l0cov::model_gen::{self, degrees};
use l0cov::seed;

fn quantile(mut v: Vec<usize>, q: f64) -> usize {
    v.sort_unstable();
    v[((v.len() - 1) as f64 * q).round() as usize]
}

#[test]
fn preferential_attachment_has_heavier_degree_tail() {
    let (p, reps) = (100, 5000);
    let mut sw_max = Vec::with_capacity(reps);
    let mut nsw_max = Vec::with_capacity(reps);
    for r in 0..reps {
        let mut rng = seed::rng(seed::derive(77, &[r as u64]));
        let sw = model_gen::preferential_edges(p, 1, &mut rng);
        let nsw = model_gen::random_edges(p, sw.len(), &mut rng);
        sw_max.push(*degrees(p, &sw).iter().max().unwrap());
        nsw_max.push(*degrees(p, &nsw).iter().max().unwrap());
    }
    let mean = |v: &[usize]| v.iter().sum::<usize>() as f64 / v.len() as f64;
    assert!(mean(&sw_max) > 2.0 * mean(&nsw_max), "{} vs {}", mean(&sw_max), mean(&nsw_max));
    for q in [0.5, 0.9, 0.99] {
        assert!(quantile(sw_max.clone(), q) > quantile(nsw_max.clone(), q));
    }
}

#[test]
fn attach_m_builds_seed_clique_plus_m_links() {
    for (p, m) in [(5, 2), (30, 3), (60, 12)] {
        let t = model_gen::gen_sw(p, m, 9).unwrap();
        assert_eq!(t.support.len(), m * (m - 1) / 2 + (p - m) * m);
        assert!(degrees(p, &t.support).iter().all(|&d| d >= m.min(p - 1)));
    }
}

#[test]
fn generator_rejects_bad_parameters() {
    assert!(model_gen::gen_nsw(10, 3, 0).is_err());
    assert!(model_gen::gen_nsw(4, 14, 0).is_err());
    assert!(model_gen::gen_sw(10, 0, 0).is_err());
    assert!(model_gen::gen_sw(10, 10, 0).is_err());
}
