"""Forward and inverse D-N maps for Schrodinger operators on square-lattice quantum graphs."""
