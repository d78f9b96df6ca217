fn main() {
    let t = std::time::Instant::now();
    let fans = mmp_surface::toric::enumerate_complete_fans(8, 2);
    println!(
        "bound 2, <=8 rays: {} fans in {:?}",
        fans.len(),
        t.elapsed()
    );
    let by_size: std::collections::BTreeMap<usize, usize> =
        fans.iter().fold(Default::default(), |mut m, f| {
            *m.entry(f.rays.len()).or_default() += 1;
            m
        });
    println!("{by_size:?}");
    let t = std::time::Instant::now();
    let mut singular = 0;
    for f in &fans {
        let s = mmp_surface::toric::config_from_fan(f).unwrap();
        if !s.model.contracted.is_empty() {
            singular += 1;
        }
    }
    println!("built all in {:?}; {singular} singular", t.elapsed());
}
