use mobles_core::agents::{AgentParams, MoblesAgent};
use mobles_core::cdm::{confidence_degree, ConfidenceInterval};
use mobles_core::gridworld::{GridMaze, SensorMode, NUM_ACTIONS};
use mobles_core::spaces::SpaceFamily;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let text = std::fs::read_to_string("maps/open_room.map").unwrap();
    let maze = GridMaze::load(&text).unwrap();
    let features = maze.feature_space(SensorMode::TwoSensor);
    let family = SpaceFamily::singletons(features);
    let mut agent = MoblesAgent::new(maze.clone(), SensorMode::TwoSensor, family, AgentParams::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let episodes: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(100);
    let mut last_weights = vec![];
    for ep in 0..episodes {
        let log = agent.run_episode(&mut rng, 2000).unwrap();
        if ep % 20 == 0 || ep == episodes-1 {
            println!("ep {:4} return {:8.1} steps {:4} weights {:?}", ep+1, log.return_sum, log.num_steps(),
              log.mean_weights.iter().map(|w| (w*1000.0).round()/1000.0).collect::<Vec<_>>());
        }
        last_weights = log.mean_weights.clone();
    }
    let _ = last_weights;
    // inspect state (5,5) and (8,8)
    let full = agent.full_model();
    let fam = agent.family().clone();
    for (x, y) in [(5u16, 5u16), (8, 8), (3, 8)] {
        let obs = maze.observe(mobles_core::gridworld::Cell::new(x, y), SensorMode::TwoSensor);
        let j = fam.full().project(obs.as_slice()).unwrap();
        println!("--- state ({x},{y}) full idx {j}");
        for a in 0..NUM_ACTIONS {
            let sa = j * NUM_ACTIONS + a;
            println!("  a{a}: n={:4} Q={:8.3} [Ql={:8.3}, Qu={:8.3}] len={:7.3}",
                full.visit_count(j, a), full.q[sa], full.q_l[sa], full.q_u[sa], full.q_u[sa]-full.q_l[sa]);
            for (xi, def) in fam.subspaces().iter().enumerate() {
                let u = def.project(obs.as_slice()).unwrap();
                let m = &agent.subspace_models()[xi];
                let ua = u * NUM_ACTIONS + a;
                let cd = confidence_degree(
                    full.q[sa], m.q[ua],
                    ConfidenceInterval::spanning(full.q_l[sa], full.q_u[sa]),
                    ConfidenceInterval::spanning(m.q_l[ua], m.q_u[ua]));
                println!("     sub {} u={u}: n={:5} Q={:8.3} [{:8.3},{:8.3}] len={:7.3} CD={:.3}",
                    def.name(), m.visit_count(u, a), m.q[ua], m.q_l[ua], m.q_u[ua], m.q_u[ua]-m.q_l[ua], cd.0);
            }
        }
    }
}
