"""HTTP service subpackage; see app.create_app."""
