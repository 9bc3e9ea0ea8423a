//! Regenerates the bundled toy fixture.
//!
//! ```text
//! cargo run --example make_fixture -- crates/core/fixtures/toy
//! ```

use expvec::fixture::{generate, FixtureSpec};

fn main() -> anyhow::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "fixtures/toy".into());
    let fixture = generate(&FixtureSpec::default());
    fixture.write_to(&dir)?;
    let tokens = fixture
        .corpus_a
        .lines()
        .filter(|l| !l.is_empty() && !l.starts_with('<'))
        .count();
    println!("wrote fixture to {dir} ({tokens} tokens in corpus_a)");
    Ok(())
}
