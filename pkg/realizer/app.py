import os

import sentry_sdk
from flask import Flask
from sentry_sdk.integrations.flask import FlaskIntegration


def create_app(config: object) -> Flask:
    """create and configure the realizer Flask application.

    :param config: Configuration object to use for the Flask app.

    :return: Configured Flask application instance.
    """
    sentry_sdk.init(
        dsn=os.environ.get('REALIZER_SENTRY_DSN'),
        integrations=[FlaskIntegration()],
        traces_sample_rate=float(
            os.environ.get('REALIZER_SENTRY_SAMPLE_RATE', 0.0),
        ),
    )

    app = Flask(__name__)
    app.config.from_object(config)

    from realizer.cache import cache
    cache.init_app(app)

    from realizer.blueprints.api import api

    app.register_blueprint(api)

    return app


if __name__ == '__main__':
    from realizer.config import Config

    app = create_app(Config)
    app.run(debug=True)
