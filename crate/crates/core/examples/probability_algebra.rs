//! Joint laws, marginals, entropies and informations of a small chain.

use chansim::probkit::{compose, total_variation, Factor, JointPmf, Kernel, Pmf};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // X ~ Bern(0.3) -> BSC(0.1) -> Y -> BEC(0.2) -> Z
    let px = Pmf::bernoulli(0.3)?;
    let bsc = Kernel::bsc(0.1)?;
    let bec = Kernel::bec(0.2)?;
    let j = compose(
        "X",
        &px,
        &[
            Factor::new(&bsc, &["X"], &[("Y", 2)]),
            Factor::new(&bec, &["Y"], &[("Z", 3)]),
        ],
    )?;
    println!("axes {:?}, shape {:?}", j.axis_names(), j.shape());
    println!("H(X)     = {:.6}", j.entropy(&["X"])?);
    println!("H(XYZ)   = {:.6}", j.entropy(&["X", "Y", "Z"])?);
    println!("I(X;Y)   = {:.6}", j.mutual_information(&["X"], &["Y"], &[])?);
    println!("I(X;Z)   = {:.6}", j.mutual_information(&["X"], &["Z"], &[])?);
    println!("I(X;Z|Y) = {:.2e}", j.mutual_information(&["X"], &["Z"], &["Y"])?);

    // the cascade as a single kernel gives the same (X, Z) law
    let direct = JointPmf::from_channel("X", &px, "Z", &bsc.then(&bec)?)?;
    println!("TV between routes = {:.2e}", total_variation(&j.marginalize(&["X", "Z"])?, &direct)?);

    let pxz = j.conditional(&["Z"], &["X"])?;
    println!("p(z|x) rows: {:?}", pxz.rows().collect::<Vec<_>>());
    println!("two-letter table has {} cells", j.iid_extend(2)?.len());
    Ok(())
}
