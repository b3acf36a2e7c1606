use born_markov::{operators, spectra, FockBasis, ModelParams};
use std::time::Instant;

fn main() {
    let p = ModelParams::REFERENCE;
    let b = FockBasis::new(6, 7).unwrap();
    let hb = operators::build_bath_hamiltonian(&p, &b).unwrap();
    let t = Instant::now();
    let es = spectra::diagonalize(&hb).unwrap();
    println!("bath 924 vectors: {:?}", t.elapsed());
    let k = es.select_by_energy(2.8361).unwrap();
    println!("nearest {:.6}", k.energy);
    println!("window {}", es.select_window(2.45, 3.21).unwrap().len());
    println!("ortho {:e} resid {:e}", es.orthonormality_defect(), es.max_residual(&hb).unwrap());
    let h = operators::build_total_hamiltonian(&p, &b).unwrap();
    let t = Instant::now();
    let _ = spectra::eigenvalues(&h).unwrap();
    println!("composite 1848 values: {:?}", t.elapsed());
    let t = Instant::now();
    let es = spectra::diagonalize(&h).unwrap();
    println!("composite 1848 vectors: {:?}", t.elapsed());
    println!("resid {:e}", es.max_residual(&h).unwrap());
}
