use ckforms::forms::{self, Metrics};
use ckforms::geometry::Geometry;
use ckforms::jet::Jet;
use ckforms::metric::MetricSpec;
use ckforms::tensor::{trace, Slot, Tensor};
use ckforms::tensor::Scalar as _;
use rand::{Rng, SeedableRng};

#[test]
fn debug_project_cftf() {
    let n = 4;
    let k = 2;
    let m = MetricSpec::flat(n, false);
    let geo = Geometry::new(&m, &[0.0; 4], 0).unwrap();
    let mets = Metrics {
        g: &geo.g,
        ginv: &geo.ginv,
        hinv: geo.hinv.as_ref(),
    };
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    let raw = Tensor::from_fn(n, &vec![Slot::Tangent; k + 1], |_| {
        Jet::constant(rng.gen_range(-1.0..1.0f64), n, 0)
    });
    let p1 = forms::project_cftf(&raw, &mets);
    let p2 = forms::project_cftf(&p1, &mets);
    println!("idempotence: {}", p2.sub(&p1).sup_norm());
    println!("trace: {}", trace(&p1, 0, 1, &geo.ginv).sup_norm());
    println!("skew: {}", forms::antisym_all(&p1).sup_norm());

    // pure trace input
    let lam = Tensor::from_fn(n, &vec![Slot::Tangent; k - 1], |_| {
        Jet::constant(rng.gen_range(-1.0..1.0f64), n, 0)
    });
    let pure = geo.g.outer(&lam).antisymmetrize(&(1..=k).collect::<Vec<_>>());
    println!("pure trace killed: {}", forms::project_cftf(&pure, &mets).sup_norm());
    let skew_in = forms::antisym_all(&raw);
    println!("skew killed: {}", forms::project_cftf(&skew_in, &mets).sup_norm());

    // trace of injection constant
    let tr_inj = trace(&pure, 0, 1, &geo.ginv);
    let ratio = tr_inj.get(&[1]).value() / lam.get(&[1]).value();
    println!("trace-of-inject ratio (expect (n-k+1)/k = 1.5): {}", ratio);
}

#[test]
fn debug_hodge_double() {
    let n = 4;
    let m = MetricSpec::flat(n, false);
    let geo = Geometry::new(&m, &[0.0; 4], 0).unwrap();
    let mets = Metrics {
        g: &geo.g,
        ginv: &geo.ginv,
        hinv: geo.hinv.as_ref(),
    };
    for k in 1..=3usize {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5 + k as u64);
        let raw = Tensor::from_fn(n, &vec![Slot::Tangent; k], |_| {
            Jet::constant(rng.gen_range(-1.0..1.0f64), n, 0)
        });
        let f = forms::antisym_all(&raw);
        let (s1, w1) = forms::hodge_star(&f, k as f64 + 1.0, &geo.vol, &mets);
        let (s2, _) = forms::hodge_star(&s1, w1, &geo.vol, &mets);
        let sign = if (k * (n - k)) % 2 == 0 { 1.0 } else { -1.0 };
        println!(
            "k={} ratio={} resid(sign {})={}",
            k,
            s2.data()[1].value() / f.data()[1].value().max(1e-30),
            sign,
            s2.sub(&f.scale(sign)).sup_norm()
        );
    }
}
