//! Hamilton products, their matrix form and the operation count.

use qlstm::quat::{hamilton_op_count, hamilton_via_matrix, to_hamilton_matrix};
use qlstm::{hamilton, Quaternion};

fn main() {
    let (i, j, k) = (Quaternion::I, Quaternion::J, Quaternion::K);
    println!("i*j = {:?}", hamilton(i, j));
    println!("j*i = {:?}", hamilton(j, i));
    println!("k*k = {:?}", hamilton(k, k));

    let x = Quaternion::new(1.0, 2.0, 3.0, 4.0);
    let y = Quaternion::new(5.0, 6.0, 7.0, 8.0);
    println!("x*y         = {:?}", hamilton(x, y));
    println!("M(x)*y      = {:?}", hamilton_via_matrix(x, y));
    println!("|x*y|       = {:.6}", hamilton(x, y).norm());
    println!("|x|*|y|     = {:.6}", x.norm() * y.norm());

    println!("left-multiplication matrix of x:");
    for row in to_hamilton_matrix(x).m {
        println!("  {row:?}");
    }
    let n = hamilton_op_count();
    println!("one product: {} mul + {} add = {} ops", n.mul, n.add, n.total());
}
