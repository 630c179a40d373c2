use gradplay::lq::*;
use nalgebra::{Matrix2, RowVector2, Vector4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn game_for(sample: u64, q: f64, r: f64) -> LqGame {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    rng.set_stream(sample);
    let a = Matrix2::new(rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>());
    LqGame::census_instance(a, q, r).unwrap()
}

fn gn(game: &LqGame, p: &FeedbackPolicy) -> f64 { gradient_norm(game, p).unwrap_or(f64::INFINITY) }

fn lyap_target(game: &LqGame, policy: &FeedbackPolicy) -> Option<FeedbackPolicy> {
    let a_cl = policy.closed_loop(game);
    if spectral_radius2(&a_cl) >= 1.0 { return None; }
    let p1 = solve_closed_loop_value(&a_cl, &(game.q1 + policy.k1.transpose() * policy.k1 * game.r1), 1e-14, 1_000_000).ok()?;
    let p2 = solve_closed_loop_value(&a_cl, &(game.q2 + policy.k2.transpose() * policy.k2 * game.r2), 1e-14, 1_000_000).ok()?;
    let d1 = game.r1 + (game.b1.transpose() * p1 * game.b1)[(0,0)];
    let d2 = game.r2 + (game.b2.transpose() * p2 * game.b2)[(0,0)];
    let m1 = (game.b1.transpose() * p1 * game.b2)[(0,0)] / d1;
    let m2 = (game.b2.transpose() * p2 * game.b1)[(0,0)] / d2;
    let n1 = (game.b1.transpose() * p1 * game.a) / d1;
    let n2 = (game.b2.transpose() * p2 * game.a) / d2;
    let det = 1.0 - m1 * m2;
    if det.abs() < 1e-12 { return None; }
    let k1t = (n1 - n2 * m1) / det;
    Some(FeedbackPolicy { k1: k1t, k2: n2 - k1t * m2 })
}

fn line_search(game: &LqGame, policy: &FeedbackPolicy, dir: [f64; 4], gn0: f64) -> Option<(FeedbackPolicy, f64)> {
    let base = policy.stacked();
    let mut alpha = 1.0f64;
    for _ in 0..40 {
        let cand = FeedbackPolicy::from_stacked([
            base[0] - alpha * dir[0], base[1] - alpha * dir[1],
            base[2] - alpha * dir[2], base[3] - alpha * dir[3]]);
        if spectral_radius2(&cand.closed_loop(game)) < 1.0 {
            let gc = gn(game, &cand);
            if gc < gn0 * (1.0 - 1e-12) { return Some((cand, gc)); }
        }
        alpha *= 0.5;
    }
    None
}

fn solve_from(game: &LqGame, start: FeedbackPolicy) -> Option<(FeedbackPolicy, f64)> {
    let mut policy = start;
    let mut g_norm = gn(game, &policy);
    if !g_norm.is_finite() { return None; }
    for _ in 0..500 {
        if g_norm <= 1e-11 { return Some((policy, g_norm)); }
        let g = stacked_gradient(game, &policy).ok()?;
        // Direction candidates, best first.
        let mut dirs: Vec<[f64; 4]> = Vec::new();
        if let Ok(jac) = lq_game_jacobian(game, &policy, 1e-6) {
            if let Some(d) = jac.lu().solve(&Vector4::new(g[0], g[1], g[2], g[3])) {
                if d.iter().all(|v| v.is_finite()) { dirs.push([d[0], d[1], d[2], d[3]]); }
            }
            // norm-descent direction J^T g
            let jt = jac.transpose() * Vector4::new(g[0], g[1], g[2], g[3]);
            let s = 1.0 / (1.0 + jt.amax());
            dirs.push([jt[0]*s, jt[1]*s, jt[2]*s, jt[3]*s]);
        }
        if let Some(t) = lyap_target(game, &policy) {
            let b = policy.stacked(); let ts = t.stacked();
            dirs.insert(dirs.len().min(1), [b[0]-ts[0], b[1]-ts[1], b[2]-ts[2], b[3]-ts[3]]);
        }
        let mut stepped = None;
        for dir in dirs {
            if let Some(hit) = line_search(game, &policy, dir, g_norm) { stepped = Some(hit); break; }
        }
        let (next, gc) = stepped?;
        policy = next; g_norm = gc;
    }
    (g_norm <= 1e-11).then_some((policy, g_norm))
}

fn main() {
    for (q, r) in [(0.01, 0.1), (0.1, 0.1), (0.9, 0.1), (0.01, 0.9), (0.5, 0.1), (0.01, 0.5)] {
        let t0 = std::time::Instant::now();
        let mut solved = 0; let mut failed = 0; let mut saddle = 0; let mut worst_resid = 0.0f64; let mut worst_rho = 0.0f64;
        for s in 0..300u64 {
            let game = game_for(s, q, r);
            let mut starts = Vec::new();
            if let Ok((k1, _)) = solve_dare_best_response(&game.a, &game.b1, &game.q1, game.r1, 1e-13, 200_000, None) {
                starts.push(FeedbackPolicy { k1, k2: RowVector2::zeros() });
            }
            if let Ok((k2, _)) = solve_dare_best_response(&game.a, &game.b2, &game.q2, game.r2, 1e-13, 200_000, None) {
                starts.push(FeedbackPolicy { k1: RowVector2::zeros(), k2 });
            }
            let mut solution = None;
            for st in starts { if let Some(sol) = solve_from(&game, st) { solution = Some(sol); break; } }
            match solution {
                None => failed += 1,
                Some((policy, _)) => {
                    solved += 1;
                    let a_cl = policy.closed_loop(&game);
                    worst_rho = worst_rho.max(spectral_radius2(&a_cl));
                    for player in 0..2 {
                        let p = closed_loop_value(&game, &policy, player).unwrap();
                        let k = policy.gain(player);
                        let cost = game.state_cost(player) + k.transpose() * *k * game.input_cost(player);
                        worst_resid = worst_resid.max((a_cl.transpose() * p * a_cl + cost - p).amax());
                    }
                    let jac = lq_game_jacobian(&game, &policy, 1e-5).unwrap();
                    let dm = nalgebra::DMatrix::from_column_slice(4, 4, jac.as_slice());
                    let eig = gradplay::linalg::eigenvalues(&dm).unwrap();
                    let scale = 1e-6 * (1.0 + jac.amax());
                    if eig.iter().all(|l| l.re.abs() > scale) && eig[0].re < 0.0 && eig[3].re > 0.0 { saddle += 1; }
                }
            }
        }
        println!("q={q} r={r}: solved={solved} failed={failed} saddle_freq={:.3} worst_resid={worst_resid:.2e} worst_rho={worst_rho:.3} ({:.1?})",
            saddle as f64 / solved.max(1) as f64, t0.elapsed());
    }
}
