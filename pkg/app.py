"""Main Flask application for the QD analysis service."""

import os
from datetime import datetime

from flask import Flask
from pydantic import ValidationError

from analysis.exceptions import DomainError, NumericalError
from routes.qd_routes import qd_bp
from utils.config import Config
from utils.experiment_config import ConfigError
from utils.logging_config import setup_logging, get_logger
from utils.response_formatter import error_response

# Get configuration
config = Config()

# Setup standardized logging
setup_logging(level=config.log_level, structured=config.log_structured)

logger = get_logger(__name__)


def create_app() -> Flask:
    """
    Create and configure the Flask application.

    Returns:
        Configured Flask application instance
    """
    app = Flask(__name__)

    try:
        from flask_cors import CORS
        CORS(app,
             origins="*",
             methods=["GET", "POST", "OPTIONS"],
             allow_headers=["Content-Type", "Accept"],
             supports_credentials=False)
        logger.info("CORS enabled for all origins")
    except ImportError:
        logger.warning("flask-cors not installed, CORS disabled")

    # Health check endpoint
    @app.route('/health', methods=['GET'])
    def health_check():
        """Health check endpoint to verify server is running."""
        return {
            'status': 'healthy',
            'timestamp': datetime.utcnow().isoformat()
        }

    # Register blueprints
    app.register_blueprint(qd_bp)

    # Error handlers
    @app.errorhandler(ConfigError)
    def config_error(error):
        """Handle invalid experiment configurations."""
        return error_response(str(error), status_code=400, data={"key": error.key})

    @app.errorhandler(DomainError)
    def domain_error(error):
        """Handle arguments outside an operation's domain."""
        return error_response(str(error), status_code=400,
                              data={"error_type": type(error).__name__, "parameter": error.parameter})

    @app.errorhandler(ValidationError)
    def validation_error(error):
        """Handle invalid request values."""
        fields = ['.'.join(str(p) for p in e['loc']) for e in error.errors()]
        return error_response("Invalid parameters", status_code=400, data={"fields": fields})

    @app.errorhandler(NumericalError)
    def numerical_error(error):
        """Handle quadrature and series budget failures."""
        logger.warning(f"Numerical failure: {error}")
        return error_response(str(error), status_code=422, data={"error_type": type(error).__name__})

    @app.errorhandler(400)
    def bad_request(error):
        """Handle 400 Bad Request errors."""
        return error_response("Bad request", status_code=400)

    @app.errorhandler(404)
    def not_found(error):
        """Handle 404 Not Found errors."""
        return error_response("Endpoint not found", status_code=404)

    @app.errorhandler(405)
    def method_not_allowed(error):
        """Handle 405 Method Not Allowed errors."""
        return error_response("Method not allowed", status_code=405)

    @app.errorhandler(500)
    def internal_error(error):
        """Handle 500 Internal Server Error."""
        logger.error(f"Internal server error: {str(error)}", exc_info=True)
        return error_response("Internal server error", status_code=500)

    @app.errorhandler(Exception)
    def handle_exception(error):
        """Handle all unhandled exceptions."""
        logger.error(f"Unhandled exception: {str(error)}", exc_info=True)
        return error_response(
            "An unexpected error occurred",
            status_code=500
        )

    logger.info("Flask application created and configured")

    return app


def main() -> None:
    """Run the Flask development server."""
    app = create_app()

    host = config.host
    port = int(os.getenv("PORT", config.port))
    debug = config.debug

    logger.info(f"Starting Flask server on {host}:{port} (debug={debug})")
    app.run(host=host, port=port, debug=debug)


if __name__ == '__main__':
    main()
