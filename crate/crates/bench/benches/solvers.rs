use criterion::{criterion_group, criterion_main, Criterion};
use ftgmres_bench::convection_diffusion;
use ftgmres_core::{
    ft_gmres, gen_log_diagonal, gmres, ones_rhs, FaultPolicy, FtConfig, Preconditioner,
};

fn solvers(c: &mut Criterion) {
    let a = gen_log_diagonal(2000, 6.0).unwrap();
    let b = ones_rhs(&a);
    let m = Preconditioner::identity(a.nrows());
    let cfg = FtConfig {
        s: 20,
        t: 10,
        ..FtConfig::default()
    };

    let mut g = c.benchmark_group("diag2000");
    g.sample_size(20);
    g.bench_function("gmres200", |bch| {
        bch.iter(|| gmres(&a, &m, &b, None, 200, 1e-8).unwrap())
    });
    g.bench_function("ftgmres_clean", |bch| {
        bch.iter(|| ft_gmres(&a, &m, &b, None, &cfg, &FaultPolicy::none()).unwrap())
    });
    let pattern: FaultPolicy = "pattern:1,0,1,0,0,0,0,0,0,0".parse().unwrap();
    g.bench_function("ftgmres_pattern", |bch| {
        bch.iter(|| ft_gmres(&a, &m, &b, None, &cfg, &pattern).unwrap())
    });
    g.finish();

    let a = convection_diffusion(48);
    let b = ones_rhs(&a);
    let m = Preconditioner::identity(a.nrows());
    let poisson = FaultPolicy::poisson(1e5, 7).with_time_step(1.0);
    c.bench_function("convdiff48/ftgmres_poisson", |bch| {
        bch.iter(|| ft_gmres(&a, &m, &b, None, &cfg, &poisson).unwrap())
    });
}

criterion_group!(benches, solvers);
criterion_main!(benches);
