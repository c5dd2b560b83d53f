//! Order-preserving fan-out, parallel when the `parallel` feature is on.

use crate::Result;

pub(crate) fn map_slice<I: Sync, T: Send>(items: &[I], f: impl Fn(&I) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}
