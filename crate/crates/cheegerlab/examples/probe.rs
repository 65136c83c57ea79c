//! Scratch probe for tolerance margins on the benchmark domains.

use std::time::Instant;

use cheegerlab::cheeger::{cheeger_convex_oracle, cheeger_dinkelbach};
use cheegerlab::eigensolver::{principal_eigen, torsion, SolverOptions};
use cheegerlab::geometry::{
    inradius, make_grid, rasterize, DomainMask, PerimeterMode, ShapeSpec,
};
use cheegerlab::ratio::ratio_f;

const J01: f64 = 2.404825557695773;

fn main() {
    let opts = SolverOptions::default();
    let pi = std::f64::consts::PI;

    // Disk r=0.4 on 128^2, the battery's tight oracle rows.
    let grid = make_grid(128, 128, (1.0, 1.0)).unwrap();
    let disk = rasterize(&ShapeSpec::Disk { cx: 0.5, cy: 0.5, r: 0.4 }, &grid).unwrap();

    let t = Instant::now();
    let l2 = principal_eigen(&disk, &grid, 2.0, &opts).unwrap().lambda;
    let target = (J01 / 0.4).powi(2);
    println!(
        "disk128 lambda2 = {l2:.4} vs {target:.4} rel {:+.3e} ({:.1}s)",
        (l2 - target) / target,
        t.elapsed().as_secs_f64()
    );

    let h = cheeger_dinkelbach(&disk, &grid, PerimeterMode::Isotropic, &opts).unwrap().h;
    println!("disk128 h = {h:.5} vs 5 rel {:+.3e}", (h - 5.0) / 5.0);

    let rho = inradius(&disk, &grid).unwrap();
    println!("disk128 rho = {rho:.5} vs 0.4 rel {:+.3e}", (rho - 0.4) / 0.4);

    let w = torsion(&disk, &grid, 2.0, &opts).unwrap();
    let peak = w.values().iter().fold(0.0f64, |m, &v| m.max(v));
    println!("disk128 torsion peak = {peak:.6} vs 0.04 rel {:+.3e}", (peak - 0.04) / 0.04);

    // Monotone chain margins on the disk at 128^2.
    let mut prev: Option<(f64, f64)> = Some((1.0, h));
    for p in [1.5, 2.0, 3.0, 4.0] {
        let t = Instant::now();
        let lam = principal_eigen(&disk, &grid, p, &opts).unwrap().lambda;
        let val = p * lam.powf(1.0 / p);
        if let Some((lo, lov)) = prev {
            let lov = lo * lov;
            println!(
                "disk128 mono {lo}->{p}: {lov:.4} -> {val:.4} ratio {:.4} ({:.1}s)",
                val / lov,
                t.elapsed().as_secs_f64()
            );
        }
        prev = Some((1.0, val));
    }

    // Rectangle oracles at the battery grids.
    for (name, ny, nx, aspect) in
        [("rect-half", 64usize, 128usize, 0.5f64), ("rect-thin", 32, 320, 0.1)]
    {
        let grid = make_grid(nx, ny, (1.0, aspect)).unwrap();
        let shape = ShapeSpec::Rect { x: 0.0, y: 0.0, w: 1.0, h: aspect };
        let mask = rasterize(&shape, &grid).unwrap();
        let oracle = cheeger_convex_oracle(&shape).unwrap();
        let t = Instant::now();
        let h = cheeger_dinkelbach(&mask, &grid, PerimeterMode::Isotropic, &opts).unwrap().h;
        println!(
            "{name} h = {h:.4} vs {oracle:.4} rel {:+.3e} ({:.1}s)",
            (h - oracle) / oracle,
            t.elapsed().as_secs_f64()
        );
    }

    // Thin-slab ratio for the convex chain: aspect 0.05 on 2560x128.
    let t = Instant::now();
    let grid = make_grid(2560, 128, (1.0, 0.05)).unwrap();
    let mask = DomainMask::from_fn(&grid, |_, _| true);
    let report = ratio_f(&mask, &grid, 2.0, 1.0, &opts).unwrap();
    println!(
        "slab 0.05 F = {:.5} vs pi/2 = {:.5} rel {:+.3e} ({:.1}s)",
        report.f,
        pi / 2.0,
        (report.f - pi / 2.0) / (pi / 2.0),
        t.elapsed().as_secs_f64()
    );

    // Aspect 0.1 slab on 1280x128.
    let t = Instant::now();
    let grid = make_grid(1280, 128, (1.0, 0.1)).unwrap();
    let mask = DomainMask::from_fn(&grid, |_, _| true);
    let report = ratio_f(&mask, &grid, 2.0, 1.0, &opts).unwrap();
    println!("slab 0.1 F = {:.5} ({:.1}s)", report.f, t.elapsed().as_secs_f64());
}
