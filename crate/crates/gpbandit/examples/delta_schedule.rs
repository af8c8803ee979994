//! The geometric gap ladder behind the improved Matern regret rate: each
//! stage shrinks the tolerance, and the stage count is finite exactly when
//! the smoothness exceeds two.

use gpbandit::bounds::delta_schedule;

fn main() {
    println!("gap schedules at horizon T = 10^4:");
    for (nu, d) in [(2.5, 1u32), (2.5, 10), (3.5, 2), (5.5, 3)] {
        match delta_schedule(nu, d, 10_000) {
            Ok(s) => {
                let stages: Vec<String> =
                    s.deltas.iter().map(|x| format!("{x:.5}")).collect();
                println!(
                    "  nu = {nu}, d = {d:>2}: q = {:.4}, {} stages: [{}]",
                    s.q,
                    s.i_bar,
                    stages.join(", ")
                );
            }
            Err(e) => println!("  nu = {nu}, d = {d:>2}: {e}"),
        }
    }

    println!("\nlow smoothness is rejected:");
    for nu in [1.5, 2.0] {
        match delta_schedule(nu, 1, 10_000) {
            Ok(_) => println!("  nu = {nu}: accepted (unexpected)"),
            Err(e) => println!("  nu = {nu}: {e}"),
        }
    }
}
