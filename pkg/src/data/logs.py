import logging

from termcolor import colored


logger = logging.getLogger('hamosc')


def cLog(msg, color='white', level=logging.DEBUG):
    logger.log(level, colored(str(msg), color))
